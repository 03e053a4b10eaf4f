//! Runs an SMT-LIB2 solver executable over a pipe.

use std::io::Write;
use std::process::{Command, Stdio};

use super::smtlib::{parse_response, Response};

/// `command` is split on whitespace, e.g. `z3 -in` or `cvc5 --lang smt2`.
pub fn run(command: &str, script: &str) -> Result<Response, String> {
    let mut parts = command.split_whitespace();
    let exe = parts.next().ok_or("empty solver command")?;
    let mut child = Command::new(exe)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start `{exe}`: {e}"))?;
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(script.as_bytes())
        .map_err(|e| format!("writing to `{exe}`: {e}"))?;
    let out = child.wait_with_output().map_err(|e| format!("waiting for `{exe}`: {e}"))?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    parse_response(&stdout).map_err(|e| {
        let stderr = String::from_utf8_lossy(&out.stderr);
        format!("`{exe}` output not understood ({e}): {}{}", stdout.trim(), stderr.trim())
    })
}

/// Looks for a usable solver: `$RTLIC_SOLVER`, then `z3`, `cvc5`, `bitwuzla` on PATH.
pub fn discover() -> Option<String> {
    if let Ok(cmd) = std::env::var("RTLIC_SOLVER") {
        if !cmd.trim().is_empty() {
            return Some(cmd);
        }
    }
    for (exe, args) in [("z3", "-in"), ("cvc5", "--lang smt2"), ("bitwuzla", "")] {
        if which(exe) {
            return Some(format!("{exe} {args}").trim().to_string());
        }
    }
    None
}

fn which(exe: &str) -> bool {
    let Some(path) = std::env::var_os("PATH") else { return false };
    std::env::split_paths(&path).any(|dir| dir.join(exe).is_file())
}
