use super::{Condition, SourceText, TranslationRecord, Triplet};

pub(crate) fn triplet(i: usize, genre: &str, author: &str) -> Triplet {
    let sid = format!("{genre}-{i}");
    let tr = |c: Condition| TranslationRecord {
        id: format!("{sid}-{author}-{c}"),
        source_id: sid.clone(),
        author: author.to_string(),
        condition: c,
        text: format!("{c} {i}"),
    };
    Triplet {
        source: SourceText { id: sid.clone(), genre: genre.to_string(), text: format!("source {i}") },
        low: tr(Condition::Low),
        high: tr(Condition::High),
    }
}
