//! Verdicts, fuel and derivation traces shared by every checker.

use std::fmt;

use serde::Serialize;

use crate::syntax::{Decl, Names, Tm, Ty, TypingCtx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Proved,
    Refuted,
    /// Fuel ran out before a verdict was reached.
    Unknown,
}

impl Verdict {
    pub fn is_proved(self) -> bool {
        self == Verdict::Proved
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Proved => "proved",
            Verdict::Refuted => "refuted",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Why a search branch failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Refuted(&'static str),
    Unknown,
}

impl Stop {
    pub fn verdict(self) -> Verdict {
        match self {
            Stop::Refuted(_) => Verdict::Refuted,
            Stop::Unknown => Verdict::Unknown,
        }
    }

    /// Combines the failures of two alternatives: running out of fuel in
    /// either one makes the disjunction undecided.
    pub fn join(self, other: Stop) -> Stop {
        match (self, other) {
            (Stop::Unknown, _) | (_, Stop::Unknown) => Stop::Unknown,
            (r, _) => r,
        }
    }
}

/// Rule-application budget. Exhaustion is sticky: once a tick fails,
/// every later tick fails too, so no verdict can depend on a branch that
/// was cut short.
#[derive(Clone, Debug)]
pub struct Fuel {
    limit: u64,
    used: u64,
    exhausted: bool,
}

impl Fuel {
    pub fn new(limit: u64) -> Fuel {
        Fuel {
            limit,
            used: 0,
            exhausted: false,
        }
    }

    pub fn tick(&mut self) -> Result<(), Stop> {
        if self.exhausted || self.used >= self.limit {
            self.exhausted = true;
            return Err(Stop::Unknown);
        }
        self.used += 1;
        Ok(())
    }

    /// Gives up on the remaining budget, for searches cut short by other
    /// limits.
    pub fn exhaust(&mut self) -> Stop {
        self.exhausted = true;
        Stop::Unknown
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }
}

pub const DEFAULT_FUEL: u64 = 1000;

/// Stack for checker runs; nesting is bounded but debug frames are large.
const CHECKER_STACK: usize = 512 << 20;

/// Runs a checker on a thread with a generous stack.
pub(crate) fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(CHECKER_STACK)
            .spawn_scoped(s, f)
            .expect("spawn checker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Deliberate rule weakenings, used only to show that the test suites
/// notice when a side condition is dropped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Mutations {
    /// Skip the good-bounds check at object creation.
    pub no_good_bounds: bool,
    /// Let the runtime unpack rule run its premise under the current
    /// abstract environment instead of the empty one.
    pub no_unpack_guard: bool,
    /// Unpack variables in the full context instead of `Γ_[x]`.
    pub no_ctx_restrict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub enum Concl {
    Sub { ctx: TypingCtx, lhs: Ty, rhs: Ty },
    Typed { ctx: TypingCtx, tm: Tm, ty: Ty },
    DeclTyped { ctx: TypingCtx, decl: Decl, ty: Ty },
    GoodBounds { ctx: TypingCtx, ty: Ty },
    DynSub(Box<crate::runtime::DynSubConcl>),
    ValueTyped(Box<crate::runtime::ValueTypedConcl>),
}

/// A derivation: a rule instance with the derivations of its premises.
#[derive(Clone, Debug, Serialize)]
pub struct Deriv {
    pub rule: &'static str,
    pub concl: Concl,
    pub premises: Vec<Deriv>,
}

impl Deriv {
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Deriv::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(Deriv::depth).max().unwrap_or(0)
    }

    pub fn any(&self, f: &mut dyn FnMut(&Deriv) -> bool) -> bool {
        f(self) || self.premises.iter().any(|p| p.any(f))
    }

    pub fn rules_used(&self) -> Vec<&'static str> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rules_used());
        }
        out
    }

    /// Indented one-line-per-node rendering.
    pub fn render(&self, names: &Names) -> String {
        let mut out = String::new();
        self.render_into(names, 0, &mut out);
        out
    }

    fn render_into(&self, names: &Names, indent: usize, out: &mut String) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&format!("[{}] {}\n", self.rule, self.concl.show(names)));
        for p in &self.premises {
            p.render_into(names, indent + 1, out);
        }
    }

    /// Machine-readable tree: rule name, conclusion text and children.
    pub fn to_json(&self, names: &Names) -> serde_json::Value {
        serde_json::json!({
            "rule": self.rule,
            "conclusion": self.concl.show(names),
            "children": self.premises.iter().map(|p| p.to_json(names)).collect::<Vec<_>>(),
        })
    }
}

impl Concl {
    pub fn show(&self, names: &Names) -> String {
        let ctx_note = |ctx: &TypingCtx| {
            if ctx.cmp_len() == 0 {
                String::new()
            } else {
                let zs: Vec<String> = ctx.cmps().iter().map(|(id, _)| format!("z{id}")).collect();
                format!("[{}] ", zs.join(","))
            }
        };
        match self {
            Concl::Sub { ctx, lhs, rhs } => {
                format!(
                    "{}{} <: {}",
                    ctx_note(ctx),
                    lhs.show(names),
                    rhs.show(names)
                )
            }
            Concl::Typed { ctx, tm, ty } => {
                format!("{}{} : {}", ctx_note(ctx), tm.show(names), ty.show(names))
            }
            Concl::DeclTyped { ctx, decl, ty } => {
                format!("{}{} : {}", ctx_note(ctx), decl.label(), ty.show(names))
            }
            Concl::GoodBounds { ctx, ty } => {
                format!("{}good bounds {}", ctx_note(ctx), ty.show(names))
            }
            Concl::DynSub(c) => c.show(names),
            Concl::ValueTyped(c) => c.show(names),
        }
    }
}

/// Outcome of one checker run.
#[derive(Clone, Debug)]
pub struct Judgment {
    pub verdict: Verdict,
    pub fuel_used: u64,
    pub trace: Option<Deriv>,
    /// The first failing obligation when refuted.
    pub reason: Option<String>,
}

impl Judgment {
    pub fn from_result(r: Result<Option<Deriv>, Stop>, fuel: &Fuel) -> Judgment {
        match r {
            Ok(trace) => Judgment {
                verdict: Verdict::Proved,
                fuel_used: fuel.used(),
                trace,
                reason: None,
            },
            Err(stop) => {
                // a refutation reached after the budget ran out may rest on
                // a truncated branch
                let verdict = if fuel.exhausted() {
                    Verdict::Unknown
                } else {
                    stop.verdict()
                };
                let reason = match stop {
                    Stop::Refuted(why) if verdict == Verdict::Refuted => Some(why.to_string()),
                    _ => None,
                };
                Judgment {
                    verdict,
                    fuel_used: fuel.used(),
                    trace: None,
                    reason,
                }
            }
        }
    }

    pub fn is_proved(&self) -> bool {
        self.verdict.is_proved()
    }
}

/// Configuration common to the checkers.
#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub fuel: u64,
    pub trace: bool,
    pub mutations: Mutations,
}

impl Default for CheckConfig {
    fn default() -> CheckConfig {
        CheckConfig {
            fuel: DEFAULT_FUEL,
            trace: false,
            mutations: Mutations::default(),
        }
    }
}

impl CheckConfig {
    pub fn with_fuel(fuel: u64) -> CheckConfig {
        CheckConfig {
            fuel,
            ..CheckConfig::default()
        }
    }

    pub fn traced(mut self) -> CheckConfig {
        self.trace = true;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustion_is_sticky() {
        let mut f = Fuel::new(2);
        assert!(f.tick().is_ok());
        assert!(f.tick().is_ok());
        assert_eq!(f.tick(), Err(Stop::Unknown));
        assert!(f.exhausted());
        assert_eq!(f.used(), 2);
    }

    #[test]
    fn unknown_dominates_failures() {
        assert_eq!(Stop::Refuted("a").join(Stop::Unknown), Stop::Unknown);
        assert_eq!(
            Stop::Refuted("a").join(Stop::Refuted("b")),
            Stop::Refuted("a")
        );
    }
}
