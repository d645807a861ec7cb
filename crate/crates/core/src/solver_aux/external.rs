use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver};
use std::time::{Duration, Instant};

/// Extra wall time granted past the solver's own timer before it is killed.
const GRACE: Duration = Duration::from_secs(2);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Timeout,
    Spawn,
    ExitStatus(Option<i32>),
    Unparseable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalFailure {
    pub kind: FailureKind,
    pub message: String,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExternalOutcome {
    /// Proven optimum in scaled units and the value per variable, which is
    /// the trajectory index per aircraft.
    Solved {
        optimum: u64,
        assignment: Vec<usize>,
        elapsed: Duration,
    },
    Unavailable {
        reason: String,
    },
    Failed(ExternalFailure),
}

impl ExternalOutcome {
    pub fn assignment(&self) -> Option<&[usize]> {
        match self {
            Self::Solved { assignment, .. } => Some(assignment),
            _ => None,
        }
    }
}

fn is_executable(p: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        p.metadata().map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
    }
    #[cfg(not(unix))]
    {
        p.is_file()
    }
}

/// Path to an executable: taken as is when it has a directory part,
/// otherwise searched in `PATH`.
pub fn resolve_binary(binary: &Path) -> Option<PathBuf> {
    if binary.components().count() > 1 || binary.is_absolute() {
        return is_executable(binary).then(|| binary.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(binary)).find(|p| is_executable(p))
}

fn variable_count(wcsp: &Path) -> Result<usize, String> {
    let text = std::fs::read_to_string(wcsp).map_err(|e| format!("cannot read {}: {e}", wcsp.display()))?;
    text.split_whitespace().nth(1).and_then(|t| t.parse().ok()).ok_or_else(|| format!("{} has no valid header", wcsp.display()))
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut r) = r {
            let _ = r.read_to_end(&mut buf);
        }
        let _ = tx.send(String::from_utf8_lossy(&buf).into_owned());
    });
    rx
}

/// Output of a reader thread. A grandchild still holding the pipe open
/// would block forever, so the wait is bounded.
fn take(rx: &Receiver<String>) -> String {
    rx.recv_timeout(Duration::from_millis(500)).unwrap_or_default()
}

fn integer_token(t: &str) -> Option<usize> {
    let v = t.rsplit_once('=').map_or(t, |(_, v)| v);
    v.parse().ok()
}

/// Optimum and solution vector from solver output. The optimum is the first
/// number after `Optimum:`; the solution is the last line made of exactly
/// `n` integer tokens (optionally `name=value`) following a `New solution`
/// line, or anywhere when none is announced.
fn parse_output(stdout: &str, n: usize) -> Option<(u64, Vec<usize>)> {
    let optimum = stdout.lines().find_map(|l| {
        let rest = &l[l.find("Optimum:")? + "Optimum:".len()..];
        let tok = rest.split_whitespace().next()?;
        tok.parse::<u64>().ok().or_else(|| tok.parse::<f64>().ok().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64))
    })?;
    let vector = |l: &str| -> Option<Vec<usize>> {
        let v: Vec<usize> = l.split_whitespace().map(integer_token).collect::<Option<_>>()?;
        (v.len() == n).then_some(v)
    };
    let lines: Vec<&str> = stdout.lines().collect();
    let announced = lines.iter().rposition(|l| l.contains("New solution"));
    let from = announced.unwrap_or(0);
    let assignment = lines[from..].iter().rev().find_map(|l| vector(l))?;
    Some((optimum, assignment))
}

fn fail(kind: FailureKind, message: impl Into<String>, stdout: String, stderr: String) -> ExternalOutcome {
    ExternalOutcome::Failed(ExternalFailure { kind, message: message.into(), stdout, stderr })
}

fn collect(child: &mut Child, out: &Receiver<String>, err: &Receiver<String>) -> (String, String) {
    let _ = child.wait();
    (take(out), take(err))
}

/// Runs a toulbar2-compatible solver on a `.wcsp` file with its own timer
/// set to `timeout` (whole seconds, rounded up), killing it if it overruns.
pub fn run_external_solver(wcsp: &Path, binary: &Path, timeout: Duration) -> ExternalOutcome {
    let Some(bin) = resolve_binary(binary) else {
        return ExternalOutcome::Unavailable { reason: format!("solver binary {} not found", binary.display()) };
    };
    let n = match variable_count(wcsp) {
        Ok(n) => n,
        Err(m) => return fail(FailureKind::Spawn, m, String::new(), String::new()),
    };
    if timeout.is_zero() {
        return fail(FailureKind::Timeout, "zero timeout", String::new(), String::new());
    }
    let started = Instant::now();
    let timer = timeout.as_secs() + u64::from(timeout.subsec_nanos() > 0);
    let spawn = || {
        Command::new(&bin)
            .arg(wcsp)
            .arg(format!("-timer={timer}"))
            .arg("-s")
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
    };
    let mut spawned = spawn();
    // A freshly written executable can be briefly busy (ETXTBSY) while a
    // concurrent fork still holds its write handle.
    for _ in 0..20 {
        match &spawned {
            Err(e) if e.raw_os_error() == Some(26) => {
                std::thread::sleep(Duration::from_millis(25));
                spawned = spawn();
            }
            _ => break,
        }
    }
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => return fail(FailureKind::Spawn, format!("cannot start {}: {e}", bin.display()), String::new(), String::new()),
    };
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let hard_deadline = started + timeout + GRACE;
    let status = loop {
        match child.try_wait() {
            Ok(Some(s)) => break s,
            Ok(None) if Instant::now() >= hard_deadline => {
                let _ = child.kill();
                let (o, e) = collect(&mut child, &out, &err);
                return fail(FailureKind::Timeout, "solver exceeded its time limit", o, e);
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                let _ = child.kill();
                let (o, er) = collect(&mut child, &out, &err);
                return fail(FailureKind::Spawn, format!("wait failed: {e}"), o, er);
            }
        }
    };
    let elapsed = started.elapsed();
    let (stdout, stderr) = (take(&out), take(&err));
    if let Some((optimum, assignment)) = parse_output(&stdout, n) {
        if status.success() {
            return ExternalOutcome::Solved { optimum, assignment, elapsed };
        }
    }
    if !status.success() {
        return fail(FailureKind::ExitStatus(status.code()), format!("solver exited with {status}"), stdout, stderr);
    }
    if stdout.contains("Time limit") || stdout.contains("time limit") || elapsed >= timeout {
        return fail(FailureKind::Timeout, "no proven optimum within the time limit", stdout, stderr);
    }
    fail(FailureKind::Unparseable, "no optimum and solution vector in solver output", stdout, stderr)
}
