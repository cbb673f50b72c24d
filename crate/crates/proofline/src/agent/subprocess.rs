//! Runs an agent as a shell command.
//!
//! The prompt is written to `<workspace>/prompt.md`, the command runs with the
//! workspace as its working directory and in its own process group, so a
//! timeout can kill the agent together with anything it spawned. Output read
//! before a timeout is kept as the transcript.

use std::fs;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::{AgentBackend, AgentError, AgentRequest, BackendRun, ExitStatus};

#[derive(Debug, Clone)]
pub struct SubprocessBackend {
    command: String,
}

/// Quotes `s` for POSIX `sh`.
pub fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn spawn_reader(mut source: impl Read + Send + 'static, sink: Arc<Mutex<Vec<u8>>>) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        let mut buf = [0u8; 4096];
        loop {
            match source.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => sink.lock().unwrap().extend_from_slice(&buf[..n]),
            }
        }
    })
}

fn kill_group(child: &mut Child) {
    // SAFETY: kill(2) with a negative pid signals the process group we created.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

impl SubprocessBackend {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into() }
    }

    pub fn command_line(&self, request: &AgentRequest) -> String {
        let prompt = request.workspace.join("prompt.md");
        self.command
            .replace("{workspace}", &shell_quote(&request.workspace.to_string_lossy()))
            .replace("{prompt}", &shell_quote(&prompt.to_string_lossy()))
            .replace("{model}", &shell_quote(request.model.as_deref().unwrap_or("")))
            .replace("{role}", &shell_quote(request.role.name()))
    }
}

impl AgentBackend for SubprocessBackend {
    fn label(&self) -> &str {
        "subprocess"
    }

    fn run(&self, request: &AgentRequest, prompt: &str) -> Result<BackendRun, AgentError> {
        fs::write(request.workspace.join("prompt.md"), prompt).map_err(|e| AgentError::Workspace(e.to_string()))?;
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(self.command_line(request))
            .current_dir(&request.workspace)
            .env("PROOFLINE_ROLE", request.role.name())
            .env("PROOFLINE_NETWORK", if request.network_allowed { "1" } else { "0" })
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()
            .map_err(|e| AgentError::SpawnFailure(e.to_string()))?;

        let stdout = Arc::new(Mutex::new(Vec::new()));
        let stderr = Arc::new(Mutex::new(Vec::new()));
        let readers = [
            spawn_reader(child.stdout.take().expect("piped"), stdout.clone()),
            spawn_reader(child.stderr.take().expect("piped"), stderr.clone()),
        ];

        let deadline = Instant::now() + request.timeout;
        let exit_status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break if status.success() { ExitStatus::Ok } else { ExitStatus::Crashed },
                Ok(None) if Instant::now() >= deadline => {
                    kill_group(&mut child);
                    let _ = child.wait();
                    break ExitStatus::Timeout;
                }
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(_) => {
                    kill_group(&mut child);
                    let _ = child.wait();
                    break ExitStatus::Crashed;
                }
            }
        };
        // Descendants that escaped the group may hold the pipes open; do not wait on them forever.
        let grace = Instant::now() + Duration::from_secs(1);
        for reader in readers {
            while !reader.is_finished() && Instant::now() < grace {
                thread::sleep(Duration::from_millis(5));
            }
            if reader.is_finished() {
                let _ = reader.join();
            }
        }
        let mut transcript = String::from_utf8_lossy(&stdout.lock().unwrap()).into_owned();
        let err = String::from_utf8_lossy(&stderr.lock().unwrap()).into_owned();
        if !err.is_empty() {
            transcript.push_str("\n--- stderr ---\n");
            transcript.push_str(&err);
        }
        Ok(BackendRun { exit_status, transcript })
    }
}
