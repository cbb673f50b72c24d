//! Human steering files, re-read before every round or proof attempt:
//! `steering/hints.md` goes to provers, `steering/verifier_rules.md` adds
//! one phase-5 rule per non-empty line.

use std::fs;
use std::io;
use std::path::Path;

use proofline_core::Finding;

pub const HINTS_FILE: &str = "steering/hints.md";
pub const RULES_FILE: &str = "steering/verifier_rules.md";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SteeringInput {
    pub hints: String,
    pub extra_rules: Vec<String>,
    /// Files that exist but could not be read; they count as absent.
    pub warnings: Vec<Finding>,
}

fn read_optional(path: &Path, warnings: &mut Vec<Finding>) -> String {
    match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
        Err(e) => {
            warnings.push(Finding::new("UnreadableSteeringFile", e.to_string()).at(path.display().to_string()));
            String::new()
        }
    }
}

pub fn read_steering(run_dir: &Path) -> SteeringInput {
    let mut warnings = Vec::new();
    let hints = read_optional(&run_dir.join(HINTS_FILE), &mut warnings).trim().to_string();
    let extra_rules = read_optional(&run_dir.join(RULES_FILE), &mut warnings)
        .lines()
        .map(|l| l.trim().trim_start_matches(['-', '*']).trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    SteeringInput { hints, extra_rules, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_directory_is_empty() {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(read_steering(tmp.path()), SteeringInput::default());
    }

    #[test]
    fn hints_and_rules() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir(tmp.path().join("steering")).unwrap();
        fs::write(tmp.path().join(HINTS_FILE), "try Fourier-analytic methods\n").unwrap();
        fs::write(tmp.path().join(RULES_FILE), "- must use Fourier methods\n\n- no appeal to RH\n").unwrap();
        let s = read_steering(tmp.path());
        assert_eq!(s.hints, "try Fourier-analytic methods");
        assert_eq!(s.extra_rules, ["must use Fourier methods", "no appeal to RH"]);
    }

    #[test]
    fn unreadable_file_warns() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join(HINTS_FILE)).unwrap();
        let s = read_steering(tmp.path());
        assert_eq!(s.hints, "");
        assert_eq!(s.warnings.len(), 1);
    }
}
