//! Newline-delimited JSON protocol over any byte stream.
//!
//! Requests: `{"cmd":"reset","seed":u64}`, `{"cmd":"step","action":0..3}`,
//! `{"cmd":"info"}`, `{"cmd":"log"}`, `{"cmd":"close"}`. Every request gets
//! exactly one reply line; errors reply `{"error":...}` and keep the
//! session open.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};

use serde_json::{json, Value};
use thiserror::Error;

use super::env::{EnvError, SpfEnv};
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Reset { seed: u64 },
    Step { action: i64 },
    Info,
    Log,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed message")]
    Malformed,
    #[error("unknown cmd")]
    UnknownCmd,
    #[error("reset needs an unsigned integer seed")]
    BadSeed,
    #[error("step needs an integer action 0..3")]
    BadAction,
}

pub fn decode_request(line: &str) -> Result<Request, WireError> {
    let v: Value = serde_json::from_str(line).map_err(|_| WireError::Malformed)?;
    let obj = v.as_object().ok_or(WireError::Malformed)?;
    let cmd = obj.get("cmd").and_then(Value::as_str).ok_or(WireError::Malformed)?;
    match cmd {
        "reset" => obj.get("seed").and_then(Value::as_u64).map(|seed| Request::Reset { seed }).ok_or(WireError::BadSeed),
        "step" => {
            let a = obj.get("action").and_then(Value::as_i64).ok_or(WireError::BadAction)?;
            if (0..4).contains(&a) {
                Ok(Request::Step { action: a })
            } else {
                Err(WireError::BadAction)
            }
        }
        "info" => Ok(Request::Info),
        "log" => Ok(Request::Log),
        "close" => Ok(Request::Close),
        _ => Err(WireError::UnknownCmd),
    }
}

fn error(msg: impl ToString) -> Value {
    json!({ "error": msg.to_string() })
}

pub struct Session {
    env: SpfEnv,
    closed: bool,
}

impl Session {
    pub fn new(cfg: SimConfig) -> Result<Self, EnvError> {
        Ok(Session { env: SpfEnv::new(cfg)?, closed: false })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn handle(&mut self, line: &str) -> Value {
        let req = match decode_request(line) {
            Ok(r) => r,
            Err(e) => return error(e),
        };
        match req {
            Request::Reset { seed } => match self.env.reset(seed) {
                Ok(obs) => json!({ "obs": obs, "t": 0 }),
                Err(e) => error(e),
            },
            Request::Step { action } => match self.env.step_index(action) {
                Ok(r) => serde_json::to_value(r).expect("step result serializes"),
                Err(e) => error(e),
            },
            Request::Info => {
                let mut v = json!({
                    "mode": self.env.mode(),
                    "obs_len": self.env.obs_len(),
                    "actions": 4,
                });
                if let Some(spec) = self.env.spec() {
                    v["episode"] = serde_json::to_value(spec).expect("spec serializes");
                }
                v
            }
            Request::Log => match self.env.log() {
                Some(log) => json!({ "log": log.to_jsonl(), "hash": log.hash() }),
                None => error(EnvError::NotReset),
            },
            Request::Close => {
                self.closed = true;
                json!({ "ok": true })
            }
        }
    }
}

/// Serves one session until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(cfg: SimConfig, reader: R, mut writer: W) -> Result<(), EnvError> {
    let mut session = Session::new(cfg)?;
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = session.handle(&line);
        if writeln!(writer, "{reply}").and_then(|_| writer.flush()).is_err() {
            break;
        }
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio(cfg: SimConfig) -> Result<(), EnvError> {
    let stdin = std::io::stdin();
    serve(cfg, stdin.lock(), std::io::stdout().lock())
}

/// One thread and one session per connection. Blocks forever.
pub fn serve_tcp<A: ToSocketAddrs>(cfg: SimConfig, addr: A) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_listener(cfg, listener)
}

pub fn serve_listener(cfg: SimConfig, listener: TcpListener) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let cfg = cfg.clone();
        std::thread::spawn(move || {
            let Ok(read_half) = stream.try_clone() else { return };
            let _ = serve(cfg, BufReader::new(read_half), stream);
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes() {
        assert_eq!(decode_request(r#"{"cmd":"reset","seed":7}"#), Ok(Request::Reset { seed: 7 }));
        assert_eq!(decode_request(r#"{"cmd":"step","action":3}"#), Ok(Request::Step { action: 3 }));
        assert_eq!(decode_request(r#"{"cmd":"nope"}"#), Err(WireError::UnknownCmd));
        assert_eq!(decode_request(r#"{"cmd":"step","action":9}"#), Err(WireError::BadAction));
        assert_eq!(decode_request("[1,2"), Err(WireError::Malformed));
        assert_eq!(decode_request(r#"{"seed":1}"#), Err(WireError::Malformed));
    }
}
