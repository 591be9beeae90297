//! External oracle bridge: one query per line out, one value per line back.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use lio_core::{Error, Oracle};

use crate::error::{CliError, Result};

/// A long-lived `sh -c` subprocess answering queries over its standard streams.
pub struct CommandOracle {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl CommandOracle {
    pub fn spawn(cmd: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| CliError::Oracle(format!("cannot start `{cmd}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = BufReader::new(child.stdout.take().expect("piped"));
        Ok(CommandOracle {
            child,
            stdin: Some(stdin),
            stdout,
        })
    }
}

/// Query line for `x`: shortest round-trip decimals separated by spaces.
pub fn format_query(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses one reply line; anything but a finite number is an error.
pub fn parse_reply(reply: &str, query: &str) -> Result<f64, Error> {
    match reply.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Oracle(format!("bad reply {:?} to query `{query}`", reply.trim_end_matches('\n')))),
    }
}

impl Oracle for CommandOracle {
    fn observe(&mut self, x: &[f64]) -> Result<f64, Error> {
        let query = format_query(x);
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Oracle("oracle input is closed".into()))?;
        writeln!(stdin, "{query}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Oracle(format!("cannot send query `{query}`: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| Error::Oracle(format!("cannot read reply to `{query}`: {e}")))?;
        if n == 0 {
            return Err(Error::Oracle(format!("oracle exited without replying to `{query}`")));
        }
        parse_reply(&reply, &query)
    }
}

impl Drop for CommandOracle {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved oracle exit on its own.
        drop(self.stdin.take());
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}
