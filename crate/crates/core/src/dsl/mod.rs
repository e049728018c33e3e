//! A small language for sketching scalar mappings.
//!
//! ```text
//! program := case (";" case)* [";"]
//! case    := range "=>" chain
//! range   := NUM [".." NUM]
//! chain   := stage ("|>" stage)*
//! stage   := "const" "(" NUM ")" | "lin" "(" NUM ".." NUM "->" NUM ".." NUM ")"
//!          | "sqrt" | "sq" | "neg" | "clamp" "(" NUM "," NUM ")"
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment running to the end of
//! the line. Cases are tried in order; the first whose inclusive range holds
//! the input wins. Stages run left to right on `f64` and only the final
//! result is rounded (half away from zero).
//!
//! ```
//! use dice_core::dsl::{parse, eval};
//! let vib = parse("0 => const(0); 1..24 => lin(1..24 -> 64..255)").unwrap();
//! assert_eq!(eval(&vib, 12.0), Ok(155));
//! ```

mod defaults;
mod eval;
mod parser;

use std::fmt;

use thiserror::Error;

pub use defaults::{default_program, default_text, MappingTarget};
pub use eval::{check_range, eval, eval_real, EvalError, RangeReport};
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Const(f64),
    Lin {
        in_lo: f64,
        in_hi: f64,
        out_lo: f64,
        out_hi: f64,
    },
    Sqrt,
    Sq,
    Neg,
    Clamp {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub lo: f64,
    pub hi: f64,
    pub chain: Vec<Stage>,
}

impl Case {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Parsed, validated mapping. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingProgram {
    cases: Vec<Case>,
}

impl MappingProgram {
    /// Validates the same invariants the parser enforces.
    pub fn new(cases: Vec<Case>) -> Result<Self, SemanticError> {
        if cases.is_empty() {
            return Err(SemanticError::EmptyProgram);
        }
        for case in &cases {
            check_case(case)?;
        }
        Ok(Self { cases })
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    /// Canonical source text; `parse(&p.to_text())` gives back `p`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

pub(crate) fn check_case(case: &Case) -> Result<(), SemanticError> {
    if !(case.lo.is_finite() && case.hi.is_finite()) {
        return Err(SemanticError::NonFinite);
    }
    if case.lo > case.hi {
        return Err(SemanticError::InvertedRange {
            lo: case.lo,
            hi: case.hi,
        });
    }
    if case.chain.is_empty() {
        return Err(SemanticError::EmptyChain);
    }
    for stage in &case.chain {
        check_stage(stage)?;
    }
    Ok(())
}

pub(crate) fn check_stage(stage: &Stage) -> Result<(), SemanticError> {
    match *stage {
        Stage::Lin { in_lo, in_hi, .. } if in_lo == in_hi => {
            Err(SemanticError::DegenerateLin { at: in_lo })
        }
        Stage::Clamp { lo, hi } if lo > hi => Err(SemanticError::InvertedClamp { lo, hi }),
        _ => Ok(()),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticError {
    #[error("program has no cases")]
    EmptyProgram,
    #[error("case has no stages")]
    EmptyChain,
    #[error("inverted range {lo}..{hi} (lo > hi)")]
    InvertedRange { lo: f64, hi: f64 },
    #[error("inverted clamp({lo}, {hi}) (lo > hi)")]
    InvertedClamp { lo: f64, hi: f64 },
    #[error("lin input range is empty ({at}..{at})")]
    DegenerateLin { at: f64 },
    #[error("number is not finite")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("invalid number `{0}`")]
    BadNumber(String),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Const(c) => write!(f, "const({c})"),
            Stage::Lin {
                in_lo,
                in_hi,
                out_lo,
                out_hi,
            } => write!(f, "lin({in_lo}..{in_hi} -> {out_lo}..{out_hi})"),
            Stage::Sqrt => f.write_str("sqrt"),
            Stage::Sq => f.write_str("sq"),
            Stage::Neg => f.write_str("neg"),
            Stage::Clamp { lo, hi } => write!(f, "clamp({lo}, {hi})"),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{} =>", self.lo)?;
        } else {
            write!(f, "{}..{} =>", self.lo, self.hi)?;
        }
        for (i, stage) in self.chain.iter().enumerate() {
            let sep = if i == 0 { " " } else { " |> " };
            write!(f, "{sep}{stage}")?;
        }
        Ok(())
    }
}

impl fmt::Display for MappingProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, case) in self.cases.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{case}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for MappingProgram {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
