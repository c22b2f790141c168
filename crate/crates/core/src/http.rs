//! Shared HTTP client plumbing: retry with exponential backoff and an
//! in-flight limiter.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use reqwest::blocking::Response;
use reqwest::StatusCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    /// First backoff; doubles after every retry.
    pub base_delay: Duration,
    /// Upper bound for a server-provided `Retry-After`.
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 3, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    pub fn no_wait(retries: u32) -> Self {
        Self { retries, base_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    /// Backoff before retry number `attempt` (0-based): 0.5 s, 1 s, 2 s, ...
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16))
    }
}

/// Outcome of one HTTP exchange, classified for retry decisions.
#[derive(Debug)]
pub enum Failure {
    Auth(String),
    RateLimited(String),
    Server(String),
    Client(String),
    Network(String),
}

impl Failure {
    fn retryable(&self) -> bool {
        matches!(self, Failure::RateLimited(_) | Failure::Server(_) | Failure::Network(_))
    }
}

fn retry_after(resp: &Response) -> Option<Duration> {
    resp.headers()
        .get(reqwest::header::RETRY_AFTER)?
        .to_str()
        .ok()?
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|s| s.is_finite() && *s >= 0.0)
        .map(Duration::from_secs_f64)
}

/// Runs `send` until it yields a 2xx response or the policy gives up.
pub fn with_retries<F>(policy: &RetryPolicy, mut send: F) -> Result<Response, Failure>
where
    F: FnMut() -> reqwest::Result<Response>,
{
    let mut attempt = 0;
    loop {
        let (failure, hinted) = match send() {
            Ok(resp) if resp.status().is_success() => return Ok(resp),
            Ok(resp) => {
                let status = resp.status();
                let hinted = retry_after(&resp);
                let body = resp.text().unwrap_or_default();
                let msg = format!("HTTP {status}: {}", body.chars().take(500).collect::<String>());
                let failure = match status {
                    StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Failure::Auth(msg),
                    StatusCode::TOO_MANY_REQUESTS => Failure::RateLimited(msg),
                    s if s.is_server_error() => Failure::Server(msg),
                    _ => Failure::Client(msg),
                };
                (failure, hinted)
            }
            Err(e) => (Failure::Network(e.to_string()), None),
        };
        if !failure.retryable() || attempt >= policy.retries {
            return Err(failure);
        }
        let wait = hinted.map(|d| d.min(policy.max_delay)).unwrap_or_else(|| policy.delay(attempt));
        log::debug!("retrying after {wait:?}: {failure:?}");
        std::thread::sleep(wait);
        attempt += 1;
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a InFlight);

impl InFlight {
    pub fn new(limit: usize) -> Self {
        Self { limit: limit.max(1), active: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(0), Duration::from_millis(500));
        assert_eq!(p.delay(1), Duration::from_secs(1));
        assert_eq!(p.delay(2), Duration::from_secs(2));
    }

    #[test]
    fn in_flight_limit_holds() {
        let gate = Arc::new(InFlight::new(2));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (gate, current, peak) = (gate.clone(), current.clone(), peak.clone());
                s.spawn(move || {
                    let _p = gate.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    current.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
