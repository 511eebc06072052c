//! Line-delimited JSON client for an out-of-process accuracy evaluator.
//!
//! One request object per line on the child's stdin, one response object
//! per line on its stdout. The child is spawned lazily and kept alive
//! across calls; a timeout kills it and the next call starts a fresh one.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_fraction, AccuracyOracle, CostHint, OracleError};
use crate::model::{ConnectionKind, PathSpec, Scenario};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub r_p: [usize; 4],
    pub kind: ConnectionKind,
    pub s: usize,
    pub scenario_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleResponse {
    pub accuracy: f64,
}

impl OracleResponse {
    /// Parses one reply line, rejecting anything but `{"accuracy": <number in [0,1]>}`.
    pub fn parse(line: &str) -> Result<f64, OracleError> {
        let reply: OracleResponse = serde_json::from_str(line.trim_end())
            .map_err(|e| OracleError::Protocol(format!("{e} in reply {:?}", line.trim_end())))?;
        check_fraction(reply.accuracy)
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(program: &str, args: &[String]) -> Result<Self, OracleError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines,
        })
    }

    fn exchange(&mut self, request: &str, timeout: Duration) -> Result<String, OracleError> {
        self.stdin.write_all(request.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        match self.lines.recv_timeout(timeout) {
            Ok(line) => Ok(line?),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(OracleError::Protocol(
                "oracle process closed its output before replying".into(),
            )),
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Accuracy evaluator running as a child process. At most one exchange is in flight.
pub struct ExternalOracle {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    session: Mutex<Option<Session>>,
}

impl std::fmt::Debug for ExternalOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalOracle")
            .field("program", &self.program)
            .field("args", &self.args)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalOracle {
    /// `command[0]` is the executable, the rest are its arguments.
    pub fn new(command: &[String], timeout: Duration) -> Result<Self, OracleError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| OracleError::Config("external oracle command is empty".into()))?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
            timeout,
            session: Mutex::new(None),
        })
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn request_for(path: &PathSpec, scenario: &Scenario) -> OracleRequest {
        OracleRequest {
            r_p: path.vector(scenario.n_f),
            kind: path.kind(),
            s: scenario.offload_count,
            scenario_id: scenario.scenario_id.clone(),
        }
    }
}

impl AccuracyOracle for ExternalOracle {
    fn evaluate(&self, path: &PathSpec, scenario: &Scenario) -> Result<f64, OracleError> {
        let request = serde_json::to_string(&Self::request_for(path, scenario))
            .map_err(|e| OracleError::Protocol(e.to_string()))?;
        let mut guard = self.session.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(Session::spawn(&self.program, &self.args)?);
        }
        let session = guard.as_mut().expect("session just created");
        match session.exchange(&request, self.timeout) {
            Ok(line) => OracleResponse::parse(&line),
            Err(e) => {
                // the child is in an unknown state after a failed exchange
                *guard = None;
                Err(e)
            }
        }
    }

    fn cost_hint(&self) -> CostHint {
        CostHint::Expensive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ServiceProfile;

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    fn scenario() -> Scenario {
        let local = ServiceProfile::from_costs("l", &[(0.0, 1.0); 6], 32, 0.867);
        let host = ServiceProfile::from_costs("h", &[(0.0, 1.0); 6], 32, 0.8);
        Scenario::new("exp4", local, Some(host), 8)
    }

    #[test]
    fn request_line_shape() {
        let req = ExternalOracle::request_for(&PathSpec::cross(0, 1, 4, 5), &scenario());
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"r_p":[0,1,4,5],"kind":"cross","s":8,"scenario_id":"exp4"}"#
        );
        let skip = ExternalOracle::request_for(&PathSpec::skip(0, 5), &scenario());
        assert_eq!(skip.r_p, [0, 100, 100, 5]);
    }

    #[test]
    fn loopback_stub_answers() {
        let o = ExternalOracle::new(
            &sh(r#"while read line; do echo '{"accuracy":0.5}'; done"#),
            Duration::from_secs(10),
        )
        .unwrap();
        let s = scenario();
        assert_eq!(o.evaluate(&PathSpec::cross(0, 1, 4, 5), &s).unwrap(), 0.5);
        // the same child serves the next request
        assert_eq!(o.evaluate(&PathSpec::skip(0, 5), &s).unwrap(), 0.5);
    }

    #[test]
    fn stub_sees_the_request() {
        let o = ExternalOracle::new(
            &sh(r#"read line; case "$line" in *'"r_p":[0,1,4,5]'*) echo '{"accuracy":0.827}';; *) echo '{"accuracy":0.1}';; esac"#),
            Duration::from_secs(10),
        )
        .unwrap();
        assert_eq!(
            o.evaluate(&PathSpec::cross(0, 1, 4, 5), &scenario())
                .unwrap(),
            0.827
        );
    }

    #[test]
    fn nan_reply_is_a_protocol_error() {
        let o = ExternalOracle::new(&sh("read line; echo nan"), Duration::from_secs(10)).unwrap();
        let err = o.evaluate(&PathSpec::skip(0, 5), &scenario()).unwrap_err();
        assert!(matches!(err, OracleError::Protocol(_)), "{err}");
    }

    #[test]
    fn out_of_range_reply_is_a_range_error() {
        let o = ExternalOracle::new(
            &sh(r#"read line; echo '{"accuracy":83.3}'"#),
            Duration::from_secs(10),
        )
        .unwrap();
        let err = o.evaluate(&PathSpec::skip(0, 5), &scenario()).unwrap_err();
        assert!(matches!(err, OracleError::Range(v) if v == 83.3));
    }

    #[test]
    fn extra_fields_are_not_coerced() {
        assert!(matches!(
            OracleResponse::parse(r#"{"accuracy":0.5,"note":"x"}"#),
            Err(OracleError::Protocol(_))
        ));
        assert!(matches!(
            OracleResponse::parse(r#"{"accuracy":"0.5"}"#),
            Err(OracleError::Protocol(_))
        ));
    }

    #[test]
    fn slow_stub_times_out() {
        let o = ExternalOracle::new(&sh("read line; sleep 5"), Duration::from_millis(200)).unwrap();
        let err = o.evaluate(&PathSpec::skip(0, 5), &scenario()).unwrap_err();
        assert!(matches!(err, OracleError::Timeout(_)), "{err}");
    }

    #[test]
    fn silent_exit_is_a_protocol_error() {
        let o = ExternalOracle::new(&sh("read line; exit 0"), Duration::from_secs(10)).unwrap();
        let err = o.evaluate(&PathSpec::skip(0, 5), &scenario()).unwrap_err();
        assert!(matches!(err, OracleError::Protocol(_)), "{err}");
    }

    #[test]
    fn empty_command_is_rejected() {
        assert!(ExternalOracle::new(&[], DEFAULT_TIMEOUT).is_err());
    }
}
