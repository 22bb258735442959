//! Client for the teacher model: caching, bounded concurrency, retries and
//! cost accounting around a pluggable [`Transport`].

mod cache;
mod config;
mod ledger;
mod transport;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use rand::Rng;
use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Method, PairRecord};
use crate::prompt::{parse_teacher_response, PromptError, PromptMode, PromptSpec, FORMAT_REMINDER};
use crate::tokenizer::Tokenizer;

pub use cache::{cache_key, CacheEntry, DiskCache};
pub use config::{ConfigError, TeacherConfig};
pub use ledger::{estimate_cost, price, CostLedger, LedgerEntry, Usage};
pub use transport::{parse_reply, ChatReply, ChatRequest, HttpTransport, Transport, TransportError};

/// Errors that stop a whole batch.
#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("teacher authentication failed: {0}")]
    Auth(String),
}

/// Why one prompt produced no pair.
#[derive(Debug, Clone, Error, PartialEq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum ItemError {
    #[error("prompt could not be built: {0}")]
    Prompt(String),
    #[error("teacher reply is not a ('formal', 'informal') tuple")]
    Format,
    #[error("endpoint error after retries: {0}")]
    Endpoint(String),
    #[error("budget exhausted before this prompt was sent")]
    Budget,
}

impl From<PromptError> for ItemError {
    fn from(e: PromptError) -> Self {
        Self::Prompt(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeacherResponse {
    /// Last completion text received, empty if none.
    pub raw_text: String,
    pub parsed: Option<(String, String)>,
    /// Served without a network call.
    pub cached: bool,
    /// Network calls made for this prompt.
    pub attempts: u32,
    pub usage: Usage,
    pub error: Option<ItemError>,
}

impl TeacherResponse {
    fn failed(error: ItemError) -> Self {
        Self {
            raw_text: String::new(),
            parsed: None,
            cached: false,
            attempts: 0,
            usage: Usage::default(),
            error: Some(error),
        }
    }

    /// Training pair for a successful response. The formal side is the
    /// prompt's own formal text, the informal side is the teacher's.
    pub fn to_pair(&self, spec: &PromptSpec) -> Option<PairRecord> {
        let (_, informal) = self.parsed.as_ref()?;
        Some(PairRecord::new(spec.formal(), informal.clone(), method_for(spec.mode), spec.source()))
    }
}

/// Result of [`TeacherClient::informalize_batch`].
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// One response per input prompt, in input order.
    pub responses: Vec<TeacherResponse>,
    /// Spend incurred by this batch only.
    pub ledger: CostLedger,
    pub network_calls: usize,
    /// Non-fatal problems such as cache write failures.
    pub warnings: Vec<String>,
}

/// Dataset method a prompt mode produces.
pub fn method_for(mode: PromptMode) -> Method {
    match mode {
        PromptMode::FullProof6Shot => Method::FullProof6Shot,
        PromptMode::Tactic0Shot => Method::IndividualTactics,
    }
}

pub struct TeacherClient {
    cfg: TeacherConfig,
    transport: Arc<dyn Transport>,
    cache: Option<DiskCache>,
    tokenizer: Arc<Tokenizer>,
}

struct Job {
    slot: usize,
    key: String,
    prompt: String,
    method: Method,
}

struct Shared<'a> {
    client: &'a TeacherClient,
    jobs: &'a [Job],
    next: AtomicUsize,
    abort: AtomicBool,
    auth_error: Mutex<Option<String>>,
    ledger: Mutex<CostLedger>,
    /// Estimated cost of requests currently in flight.
    reserved: Mutex<Decimal>,
    budget: Option<Decimal>,
    calls: AtomicUsize,
    results: Mutex<Vec<Option<TeacherResponse>>>,
    warnings: Mutex<Vec<String>>,
}

impl TeacherClient {
    pub fn new(cfg: TeacherConfig, transport: Arc<dyn Transport>) -> Self {
        Self {
            cfg,
            transport,
            cache: None,
            tokenizer: Arc::new(Tokenizer::reference().clone()),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Tokenizer used to estimate usage when the endpoint reports none.
    pub fn with_tokenizer(mut self, tokenizer: Arc<Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn config(&self) -> &TeacherConfig {
        &self.cfg
    }

    /// Send every prompt to the teacher, at most `max_parallel` at a time.
    ///
    /// Identical prompts are sent once. Cached answers are reused without a
    /// network call. With a `budget`, no new request starts once the spend
    /// plus in-flight estimates would exceed it; a zero budget replays the
    /// cache only. An authentication failure aborts the batch.
    pub fn informalize_batch(&self, specs: &[PromptSpec], budget: Option<Decimal>) -> Result<BatchOutcome, TeacherError> {
        let mut results: Vec<Option<TeacherResponse>> = vec![None; specs.len()];
        // For duplicate prompts: index of the first occurrence.
        let mut alias: Vec<Option<usize>> = vec![None; specs.len()];
        let mut first_by_key: HashMap<String, usize> = HashMap::new();
        let mut jobs = Vec::new();

        for (i, spec) in specs.iter().enumerate() {
            let rendered = match spec.render() {
                Ok(r) => r,
                Err(e) => {
                    results[i] = Some(TeacherResponse::failed(e.into()));
                    continue;
                }
            };
            let key = cache_key(&self.cfg.model_name, self.cfg.temperature, &rendered.text);
            if let Some(&first) = first_by_key.get(&key) {
                alias[i] = Some(first);
                continue;
            }
            first_by_key.insert(key.clone(), i);
            if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
                if let Ok(pair) = parse_teacher_response(&hit.response) {
                    results[i] = Some(TeacherResponse {
                        raw_text: hit.response,
                        parsed: Some(pair),
                        cached: true,
                        attempts: 0,
                        usage: hit.usage,
                        error: None,
                    });
                    continue;
                }
            }
            jobs.push(Job {
                slot: i,
                key,
                prompt: rendered.text,
                method: method_for(spec.mode),
            });
        }

        let shared = Shared {
            client: self,
            jobs: &jobs,
            next: AtomicUsize::new(0),
            abort: AtomicBool::new(false),
            auth_error: Mutex::new(None),
            ledger: Mutex::new(CostLedger::default()),
            reserved: Mutex::new(Decimal::ZERO),
            budget,
            calls: AtomicUsize::new(0),
            results: Mutex::new(results),
            warnings: Mutex::new(Vec::new()),
        };
        let workers = self.cfg.max_parallel.max(1).min(jobs.len());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| shared.work());
            }
        });

        if let Some(msg) = shared.auth_error.into_inner().expect("no worker panicked") {
            return Err(TeacherError::Auth(msg));
        }
        let mut results = shared.results.into_inner().expect("no worker panicked");
        for i in 0..specs.len() {
            if let Some(first) = alias[i] {
                let mut copy = results[first].clone().expect("first occurrence resolved");
                copy.cached = true;
                copy.attempts = 0;
                copy.usage = Usage::default();
                results[i] = Some(copy);
            }
        }
        Ok(BatchOutcome {
            responses: results
                .into_iter()
                .map(|r| r.expect("every prompt resolved"))
                .collect(),
            ledger: shared.ledger.into_inner().expect("no worker panicked"),
            network_calls: shared.calls.into_inner(),
            warnings: shared.warnings.into_inner().expect("no worker panicked"),
        })
    }

    fn estimated_usage(&self, prompt: &str, completion: &str) -> Usage {
        Usage {
            prompt_tokens: self.tokenizer.count(prompt) as u64,
            completion_tokens: self.tokenizer.count(completion) as u64,
        }
    }

    fn backoff(&self, attempt: u32) {
        let base = self.cfg.retry_base_ms.saturating_mul(1u64 << attempt.min(16));
        if base == 0 {
            return;
        }
        let jitter = rand::thread_rng().gen_range(0..=base / 2);
        thread::sleep(Duration::from_millis(base + jitter));
    }
}

impl Shared<'_> {
    fn work(&self) {
        loop {
            if self.abort.load(Ordering::SeqCst) {
                return;
            }
            let i = self.next.fetch_add(1, Ordering::SeqCst);
            let Some(job) = self.jobs.get(i) else { return };
            let response = match self.reserve(job) {
                Some(estimate) => {
                    let r = self.run(job);
                    *self.reserved.lock().expect("lock") -= estimate;
                    r
                }
                None => TeacherResponse::failed(ItemError::Budget),
            };
            self.results.lock().expect("lock")[job.slot] = Some(response);
        }
    }

    /// Reserve the estimated input cost of `job`, or `None` if that would
    /// break the budget.
    fn reserve(&self, job: &Job) -> Option<Decimal> {
        let estimate = price(self.client.estimated_usage(&job.prompt, ""), &self.client.cfg);
        let Some(budget) = self.budget else {
            return Some(Decimal::ZERO);
        };
        if budget.is_zero() {
            return None;
        }
        let ledger = self.ledger.lock().expect("lock");
        let mut reserved = self.reserved.lock().expect("lock");
        if ledger.total_cost() + *reserved + estimate > budget {
            return None;
        }
        *reserved += estimate;
        Some(estimate)
    }

    fn run(&self, job: &Job) -> TeacherResponse {
        let client = self.client;
        let mut request = ChatRequest {
            model: client.cfg.model_name.clone(),
            temperature: client.cfg.temperature,
            prompt: job.prompt.clone(),
        };
        let mut usage = Usage::default();
        let mut attempts = 0u32;
        let mut retries = 0u32;
        let mut reminded = false;
        let mut raw_text = String::new();

        let outcome: Result<(String, String), ItemError> = loop {
            if self.abort.load(Ordering::SeqCst) {
                break Err(ItemError::Endpoint("batch aborted".into()));
            }
            attempts += 1;
            self.calls.fetch_add(1, Ordering::SeqCst);
            match client.transport.complete(&request) {
                Ok(reply) => {
                    usage += reply
                        .usage
                        .unwrap_or_else(|| client.estimated_usage(&request.prompt, &reply.content));
                    raw_text = reply.content;
                    match parse_teacher_response(&raw_text) {
                        Ok(pair) => break Ok(pair),
                        Err(_) if !reminded => {
                            reminded = true;
                            request.prompt = format!("{}{}", job.prompt, FORMAT_REMINDER);
                        }
                        Err(_) => break Err(ItemError::Format),
                    }
                }
                Err(TransportError::Auth(msg)) => {
                    self.abort.store(true, Ordering::SeqCst);
                    self.auth_error.lock().expect("lock").get_or_insert(msg.clone());
                    break Err(ItemError::Endpoint(format!("authentication failed: {msg}")));
                }
                Err(e) if e.is_retryable() && retries < client.cfg.max_retries => {
                    client.backoff(retries);
                    retries += 1;
                }
                Err(e) => break Err(ItemError::Endpoint(e.to_string())),
            }
        };

        if usage != Usage::default() || !raw_text.is_empty() {
            self.ledger.lock().expect("lock").record(job.method, usage, &client.cfg);
        }
        match outcome {
            Ok(pair) => {
                if let Some(cache) = &client.cache {
                    let entry = CacheEntry {
                        key: job.key.clone(),
                        model: client.cfg.model_name.clone(),
                        temperature: client.cfg.temperature,
                        prompt: job.prompt.clone(),
                        response: raw_text.clone(),
                        usage,
                        timestamp: chrono::Utc::now().to_rfc3339(),
                    };
                    if let Err(e) = cache.put(&entry) {
                        self.warnings.lock().expect("lock").push(format!("cache write {}: {e}", job.key));
                    }
                }
                TeacherResponse {
                    raw_text,
                    parsed: Some(pair),
                    cached: false,
                    attempts,
                    usage,
                    error: None,
                }
            }
            Err(error) => TeacherResponse {
                raw_text,
                parsed: None,
                cached: false,
                attempts,
                usage,
                error: Some(error),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::TheoremRecord;
    use std::collections::VecDeque;

    /// Replays scripted replies, then echoes a tuple.
    struct Scripted {
        replies: Mutex<VecDeque<Result<ChatReply, TransportError>>>,
        seen: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: Vec<Result<ChatReply, TransportError>>) -> Arc<Self> {
            Arc::new(Self {
                replies: Mutex::new(replies.into()),
                seen: Mutex::new(Vec::new()),
            })
        }
    }

    impl Transport for Scripted {
        fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError> {
            self.seen.lock().unwrap().push(request.prompt.clone());
            self.replies.lock().unwrap().pop_front().unwrap_or_else(|| {
                Ok(ChatReply {
                    content: "('f', 'echo')".into(),
                    usage: Some(Usage {
                        prompt_tokens: 10,
                        completion_tokens: 5,
                    }),
                })
            })
        }
    }

    fn reply(text: &str) -> Result<ChatReply, TransportError> {
        Ok(ChatReply {
            content: text.into(),
            usage: Some(Usage {
                prompt_tokens: 100,
                completion_tokens: 10,
            }),
        })
    }

    fn spec(name: &str) -> PromptSpec {
        PromptSpec::full_proof(TheoremRecord {
            id: format!("a.lean:1:{name}"),
            name: name.into(),
            statement: format!("theorem {name} : True"),
            proof_body: "trivial".into(),
            source_file: "a.lean".into(),
            line_start: 1,
            line_end: 1,
        })
    }

    fn cfg() -> TeacherConfig {
        TeacherConfig {
            retry_base_ms: 0,
            max_parallel: 2,
            ..Default::default()
        }
    }

    #[test]
    fn format_retry_appends_reminder_once() {
        let t = Scripted::new(vec![reply("I think it means x"), reply("('f', 'ok')")]);
        let client = TeacherClient::new(cfg(), t.clone());
        let out = client.informalize_batch(&[spec("a")], None).unwrap();
        let r = &out.responses[0];
        assert_eq!(r.parsed.as_ref().unwrap().1, "ok");
        assert_eq!(r.attempts, 2);
        assert_eq!(r.usage.prompt_tokens, 200);
        let seen = t.seen.lock().unwrap();
        assert!(seen[1].ends_with(FORMAT_REMINDER));
        assert_eq!(out.ledger.total_requests(), 1);
    }

    #[test]
    fn second_format_failure_is_recorded() {
        let t = Scripted::new(vec![reply("nope"), reply("still nope")]);
        let out = TeacherClient::new(cfg(), t).informalize_batch(&[spec("a")], None).unwrap();
        assert_eq!(out.responses[0].error, Some(ItemError::Format));
        assert_eq!(out.responses[0].raw_text, "still nope");
        // the failed request still consumed tokens
        assert_eq!(out.ledger.total_requests(), 1);
    }

    #[test]
    fn retries_transport_errors_then_gives_up() {
        let t = Scripted::new(vec![Err(TransportError::RateLimited), reply("('f', 'i')")]);
        let out = TeacherClient::new(cfg(), t).informalize_batch(&[spec("a")], None).unwrap();
        assert!(out.responses[0].parsed.is_some());
        assert_eq!(out.network_calls, 2);

        let errs = (0..4).map(|_| Err(TransportError::Network("down".into()))).collect();
        let out = TeacherClient::new(cfg(), Scripted::new(errs))
            .informalize_batch(&[spec("a")], None)
            .unwrap();
        assert!(matches!(out.responses[0].error, Some(ItemError::Endpoint(_))));
        assert_eq!(out.network_calls, 4);
        assert_eq!(out.ledger.total_requests(), 0);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = Scripted::new(vec![Err(TransportError::Client {
            status: 400,
            body: "bad".into(),
        })]);
        let out = TeacherClient::new(cfg(), t).informalize_batch(&[spec("a")], None).unwrap();
        assert_eq!(out.network_calls, 1);
        assert!(out.responses[0].error.is_some());
    }

    #[test]
    fn auth_aborts() {
        let t = Scripted::new(vec![Err(TransportError::Auth("no key".into()))]);
        let c = TeacherConfig {
            max_parallel: 1,
            ..cfg()
        };
        let err = TeacherClient::new(c, t.clone())
            .informalize_batch(&[spec("a"), spec("b"), spec("c")], None)
            .unwrap_err();
        assert!(matches!(err, TeacherError::Auth(_)));
        assert_eq!(t.seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn duplicates_within_batch_sent_once() {
        let t = Scripted::new(vec![]);
        let out = TeacherClient::new(cfg(), t)
            .informalize_batch(&[spec("a"), spec("a"), spec("b")], None)
            .unwrap();
        assert_eq!(out.network_calls, 2);
        assert!(out.responses[1].cached);
        assert_eq!(out.responses[0].parsed, out.responses[1].parsed);
    }

    #[test]
    fn zero_budget_is_cache_only() {
        let t = Scripted::new(vec![]);
        let out = TeacherClient::new(cfg(), t)
            .informalize_batch(&[spec("a")], Some(Decimal::ZERO))
            .unwrap();
        assert_eq!(out.network_calls, 0);
        assert_eq!(out.responses[0].error, Some(ItemError::Budget));
    }

    #[test]
    fn prompt_errors_are_per_item() {
        let mut bad = spec("a");
        bad.shots.truncate(2);
        let out = TeacherClient::new(cfg(), Scripted::new(vec![]))
            .informalize_batch(&[bad, spec("b")], None)
            .unwrap();
        assert!(matches!(out.responses[0].error, Some(ItemError::Prompt(_))));
        assert!(out.responses[1].parsed.is_some());
    }

    #[test]
    fn pair_uses_spec_formal() {
        let s = spec("a");
        let out = TeacherClient::new(cfg(), Scripted::new(vec![]))
            .informalize_batch(std::slice::from_ref(&s), None)
            .unwrap();
        let p = out.responses[0].to_pair(&s).unwrap();
        assert_eq!(p.formal, "theorem a : True := trivial");
        assert_eq!(p.informal, "echo");
        assert_eq!(p.method, Method::FullProof6Shot);
        assert_eq!(p.source, "a.lean:1:a");
    }
}
