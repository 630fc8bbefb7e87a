//! Config files and resolution of the shared flags into model objects.
//!
//! A config file holds one `key = value` per line, keys spelled like the
//! long flags without dashes (`N`, `q`, `ps`, `policy`, `pr`, ...). Blank
//! lines and lines starting with `#` are skipped. Flags given on the command
//! line take precedence over the file.

use std::path::Path;
use std::str::FromStr;

use aoii_core::{ActuationPolicy, ChannelParams, PolicyKind, SamplingPolicy, SourceParams};
use clap::ValueEnum;

use crate::args::{Format, Metric, Params};
use crate::error::CliError;

pub const DEFAULT_SLOTS: u64 = 1_000_000;
pub const DEFAULT_REPS: u32 = 10;

pub fn load(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
    parse(&text)
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize, errors: &mut Vec<String>) -> Option<T> {
    match raw.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(format!(
                "config line {line}: invalid value for {key}: '{raw}'"
            ));
            None
        }
    }
}

fn choice<T: ValueEnum>(key: &str, raw: &str, line: usize, errors: &mut Vec<String>) -> Option<T> {
    match T::from_str(raw, false) {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(format!(
                "config line {line}: invalid value for {key}: '{raw}'"
            ));
            None
        }
    }
}

pub fn parse(text: &str) -> Result<Params, CliError> {
    let mut p = Params::default();
    let mut errors = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, raw)) = trimmed.split_once('=') else {
            errors.push(format!("config line {line}: expected 'key = value'"));
            continue;
        };
        let (key, raw) = (key.trim(), raw.trim());
        let e = &mut errors;
        match key {
            "N" => p.n_states = value(key, raw, line, e),
            "q" => p.q = value(key, raw, line, e),
            "ps" => p.ps = value(key, raw, line, e),
            "policy" => p.policy = Some(raw.to_string()),
            "pr" => p.pr = value(key, raw, line, e),
            "pc" => p.pc = value(key, raw, line, e),
            "qa1" => p.qa1 = value(key, raw, line, e),
            "qa2" => p.qa2 = value(key, raw, line, e),
            "n" => p.threshold = value(key, raw, line, e),
            "pth" => p.pth = value(key, raw, line, e),
            "eta" => p.eta = value(key, raw, line, e),
            "mu" => p.mu = value(key, raw, line, e),
            "pc1" => p.pc1 = value(key, raw, line, e),
            "pc2" => p.pc2 = value(key, raw, line, e),
            "slots" => p.slots = value(key, raw, line, e),
            "burnin" => p.burnin = value(key, raw, line, e),
            "reps" => p.reps = value(key, raw, line, e),
            "seed" => p.seed = value(key, raw, line, e),
            "truncation" => p.truncation = value(key, raw, line, e),
            "metric" => p.metric = choice::<Metric>(key, raw, line, e),
            "format" => p.format = choice::<Format>(key, raw, line, e),
            "out" => p.out = Some(raw.into()),
            _ => errors.push(format!("config line {line}: unknown key '{key}'")),
        }
    }
    if errors.is_empty() {
        Ok(p)
    } else {
        Err(CliError::Invalid(errors))
    }
}

/// `flags` wins wherever it has a value.
pub fn merge(flags: Params, file: Params) -> Params {
    Params {
        n_states: flags.n_states.or(file.n_states),
        q: flags.q.or(file.q),
        ps: flags.ps.or(file.ps),
        policy: flags.policy.or(file.policy),
        pr: flags.pr.or(file.pr),
        pc: flags.pc.or(file.pc),
        qa1: flags.qa1.or(file.qa1),
        qa2: flags.qa2.or(file.qa2),
        threshold: flags.threshold.or(file.threshold),
        pth: flags.pth.or(file.pth),
        eta: flags.eta.or(file.eta),
        mu: flags.mu.or(file.mu),
        pc1: flags.pc1.or(file.pc1),
        pc2: flags.pc2.or(file.pc2),
        slots: flags.slots.or(file.slots),
        burnin: flags.burnin.or(file.burnin),
        reps: flags.reps.or(file.reps),
        seed: flags.seed.or(file.seed),
        truncation: flags.truncation.or(file.truncation),
        metric: flags.metric.or(file.metric),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format),
    }
}

/// Turns optional flags into validated model objects, collecting one
/// diagnostic per problem so that all of them are reported together.
pub struct Resolver<'a> {
    p: &'a Params,
    errors: Vec<String>,
}

impl<'a> Resolver<'a> {
    pub fn new(p: &'a Params) -> Self {
        Self {
            p,
            errors: Vec::new(),
        }
    }

    pub fn params(&self) -> &Params {
        self.p
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn require<T: Copy>(&mut self, v: Option<T>, flag: &str) -> Option<T> {
        if v.is_none() {
            self.fail(format!("missing required flag --{flag}"));
        }
        v
    }

    fn absorb<T>(&mut self, r: aoii_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.extend(CliError::from(e).lines());
                None
            }
        }
    }

    pub fn source(&mut self) -> Option<SourceParams> {
        let n = self.require(self.p.n_states, "N");
        let q = self.require(self.p.q, "q");
        let (n, q) = (n?, q?);
        match SourceParams::new(n, q) {
            Ok(s) => Some(s),
            Err(e) => {
                self.errors.push(e.to_string());
                // A bad N hides a bad q; report both.
                if n < 2 {
                    if let Err(e2) = SourceParams::new(2, q) {
                        self.errors.push(e2.to_string());
                    }
                }
                None
            }
        }
    }

    pub fn channel(&mut self) -> Option<ChannelParams> {
        let ps = self.require(self.p.ps, "ps")?;
        self.absorb(ChannelParams::new(ps))
    }

    pub fn policy_kind(&mut self) -> Option<PolicyKind> {
        let name = self.p.policy.clone();
        let name = self.require(name.as_deref(), "policy")?;
        match name.parse::<PolicyKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                self.fail(e.to_string());
                None
            }
        }
    }

    /// The sampling policy named by `--policy` with its parameter flags.
    pub fn policy(&mut self) -> Option<SamplingPolicy> {
        let kind = self.policy_kind()?;
        let p = self.p;
        let policy = match kind {
            PolicyKind::Rs => SamplingPolicy::Rs {
                p_r: self.require(p.pr, "pr")?,
            },
            PolicyKind::Cars => SamplingPolicy::Cars {
                p_c: self.require(p.pc, "pc")?,
            },
            PolicyKind::Sars => {
                let a = self.require(p.qa1, "qa1");
                let b = self.require(p.qa2, "qa2");
                SamplingPolicy::Sars { q_a1: a?, q_a2: b? }
            }
            PolicyKind::Tars => {
                let n = self.require(p.threshold, "n");
                let t = self.require(p.pth, "pth");
                SamplingPolicy::Tars { n: n?, p_th: t? }
            }
        };
        self.absorb(policy.validate().map(|_| policy))
    }

    /// `--pc1`/`--pc2`, each defaulting to 1 (act in every slot).
    pub fn actuation(&mut self) -> Option<ActuationPolicy> {
        let r = ActuationPolicy::new(self.p.pc1.unwrap_or(1.0), self.p.pc2.unwrap_or(1.0));
        self.absorb(r)
    }

    /// A budget in `(0, 1]`.
    pub fn budget(&mut self, v: Option<f64>, flag: &str) -> Option<f64> {
        let v = self.require(v, flag)?;
        if v > 0.0 && v <= 1.0 {
            Some(v)
        } else {
            self.fail(format!("{flag} out of range: {v} (need 0 < {flag} <= 1)"));
            None
        }
    }

    pub fn truncation(&mut self, default: usize) -> Option<usize> {
        let k = self.p.truncation.unwrap_or(default);
        if k >= 1 {
            Some(k)
        } else {
            self.fail("truncation out of range: 0 (need K >= 1)");
            None
        }
    }

    pub fn format(&self, default: Format) -> Format {
        self.p.format.unwrap_or(default)
    }

    pub fn metric(&self) -> Metric {
        self.p.metric.unwrap_or(Metric::Aoii)
    }

    /// Ok only if nothing was reported.
    pub fn finish(self) -> Result<(), CliError> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(self.errors))
        }
    }
}

/// Collects resolved values, failing with every diagnostic at once.
pub fn resolved<T>(r: Resolver<'_>, v: Option<T>) -> Result<T, CliError> {
    r.finish()?;
    Ok(v.expect("no diagnostics implies a value"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let file =
            parse("# model\nN = 3\nq=0.1\n\nps = 0.8\npolicy = rs\npr = 0.2\nformat = csv\n")
                .unwrap();
        let flags = Params {
            pr: Some(0.5),
            ..Params::default()
        };
        let p = merge(flags, file);
        assert_eq!(p.n_states, Some(3));
        assert_eq!(p.pr, Some(0.5));
        assert_eq!(p.format, Some(Format::Csv));
    }

    #[test]
    fn reports_every_bad_line() {
        let Err(CliError::Invalid(lines)) = parse("N = x\nfoo = 1\nno equals sign\n") else {
            panic!()
        };
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("unknown key 'foo'"));
    }

    #[test]
    fn resolver_collects_all_violations() {
        let p = Params {
            n_states: Some(3),
            q: Some(1.2),
            ps: Some(-0.1),
            policy: Some("sars".into()),
            qa1: Some(0.9),
            qa2: Some(0.1),
            ..Params::default()
        };
        let mut r = Resolver::new(&p);
        r.source();
        r.channel();
        r.policy();
        let Err(CliError::Invalid(lines)) = r.finish() else {
            panic!()
        };
        assert!(lines.iter().any(|l| l.starts_with("q out of range")));
        assert!(lines.iter().any(|l| l.starts_with("ps out of range")));
        assert!(lines.iter().any(|l| l.contains("q_a2 < q_a1")));
    }
}
