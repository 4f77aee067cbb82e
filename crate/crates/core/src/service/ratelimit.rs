/// Token bucket holding at most `rate` tokens and refilling `rate` tokens per
/// second. A rate of zero disables limiting.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    rate: f64,
    tokens: f64,
    last: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateDecision {
    Allow,
    /// Seconds until a token is available.
    RetryAfter(f64),
}

impl TokenBucket {
    /// A full bucket whose clock starts at `now` seconds.
    pub fn new(rate: f64, now: f64) -> Self {
        TokenBucket { rate, tokens: rate, last: now }
    }

    pub fn check(&mut self, now: f64) -> RateDecision {
        if self.rate <= 0.0 {
            return RateDecision::Allow;
        }
        if now > self.last {
            self.tokens = (self.tokens + (now - self.last) * self.rate).min(self.rate);
            self.last = now;
        }
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            RateDecision::Allow
        } else {
            RateDecision::RetryAfter((1.0 - self.tokens) / self.rate)
        }
    }
}
