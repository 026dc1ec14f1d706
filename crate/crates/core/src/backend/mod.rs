//! Model outputs: the score-dump format, an HTTP client for completion
//! endpoints, and the bundled generation prompts.

mod client;
pub mod dump;
pub mod mock;
pub mod prompts;

#[cfg(feature = "http")]
pub use client::HttpTransport;
pub use client::{BackendClient, BackendConfig, BackendError, FetchItem, HttpResponse, LogprobCache, Transport};
pub use dump::{parse_dump, read_dump, write_dump, write_dump_to, DumpError, LayerEmbeddings, TokenScores, Violation};
pub use prompts::{default_scoring_template, GenerationPrompt, PromptKind};

/// Environment variable holding the endpoint API key.
pub const API_KEY_ENV: &str = "TTK_API_KEY";

#[cfg(all(test, feature = "http"))]
mod http_tests {
    use super::mock::{mock_char_logprob, MockMode, MockServer};
    use super::*;
    use std::time::Duration;

    fn client(server: &MockServer, retries: u32) -> BackendClient {
        let cfg = BackendConfig {
            retries,
            backoff_base: Duration::from_millis(1),
            timeout: Duration::from_secs(5),
            ..BackendConfig::new(server.base_url(), "mock-model")
        };
        BackendClient::http(cfg).unwrap()
    }

    #[test]
    fn three_logprobs_over_http() {
        let server = MockServer::start(MockMode::Normal).unwrap();
        let c = client(&server, 0);
        let s = c.fetch_logprobs("s1", "hello", "翻译了").unwrap();
        assert_eq!(s.n_tokens, 3);
        let want: Vec<f64> = "翻译了".chars().map(mock_char_logprob).collect();
        assert_eq!(s.token_logprobs, want);
        assert!(s.token_entropies.is_none());
        c.fetch_logprobs("s1", "hello", "翻译了").unwrap();
        assert_eq!(server.request_count(), 1);
    }

    #[test]
    fn five_hundred_retried() {
        let server = MockServer::start(MockMode::FailWith(500)).unwrap();
        let err = client(&server, 2).fetch_logprobs("s", "a", "b").unwrap_err();
        assert!(matches!(err, BackendError::Status { status: 500, attempts: 3, .. }));
        assert_eq!(server.request_count(), 3);
    }

    #[test]
    fn capability_error_over_http() {
        let server = MockServer::start(MockMode::NoLogprobs).unwrap();
        let err = client(&server, 0).fetch_logprobs("s", "a", "b").unwrap_err();
        assert_eq!(err.class(), crate::ErrorClass::Capability);
    }

    #[test]
    fn vanilla_echo() {
        let server = MockServer::start(MockMode::Normal).unwrap();
        let p = GenerationPrompt::bundled(PromptKind::Vanilla);
        let out = client(&server, 0).generate_translation(&p, "Good morning.").unwrap();
        assert_eq!(out, p.render("Good morning."));
    }
}
