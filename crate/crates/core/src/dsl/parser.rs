use super::{
    check_case, check_stage, Case, MappingProgram, ParseError, ParseErrorKind, SemanticError, Stage,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    DotDot,
    FatArrow,
    Arrow,
    Pipe,
    Semi,
    Comma,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::DotDot => "`..`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Pipe => "`|>`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

fn err(pos: Pos, kind: ParseErrorKind) -> ParseError {
    ParseError {
        line: pos.line,
        col: pos.col,
        kind,
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let at = |i: usize| chars.get(i).copied();

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let starts_number =
            c.is_ascii_digit() || (c == '-' && at(i + 1).is_some_and(|d| d.is_ascii_digit()));
        if starts_number {
            let start = i;
            i += 1;
            while at(i).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
            }
            // A fraction needs a digit after the dot; `1..2` is a range.
            if at(i) == Some('.') && at(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while at(i).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n: f64 = text
                .parse()
                .map_err(|_| err(pos, ParseErrorKind::BadNumber(text.clone())))?;
            if !n.is_finite() {
                return Err(err(pos, ParseErrorKind::BadNumber(text)));
            }
            col += i - start;
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while at(i).is_some_and(|d| d.is_ascii_alphanumeric() || d == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let two = (c, at(i + 1).unwrap_or('\0'));
        let (tok, len) = match two {
            ('.', '.') => (Tok::DotDot, 2),
            ('=', '>') => (Tok::FatArrow, 2),
            ('-', '>') => (Tok::Arrow, 2),
            ('|', '>') => (Tok::Pipe, 2),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            _ => return Err(err(pos, ParseErrorKind::UnexpectedChar(c))),
        };
        i += len;
        col += len;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        err(
            self.pos(),
            ParseErrorKind::Unexpected {
                expected: expected.to_string(),
                found: self.peek().describe(),
            },
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn program(&mut self) -> Result<MappingProgram, ParseError> {
        if *self.peek() == Tok::Eof {
            return Err(err(self.pos(), SemanticError::EmptyProgram.into()));
        }
        let mut cases = vec![self.case()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            if *self.peek() == Tok::Eof {
                break;
            }
            cases.push(self.case()?);
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("`;` or end of input"));
        }
        Ok(MappingProgram { cases })
    }

    fn case(&mut self) -> Result<Case, ParseError> {
        let start = self.pos();
        let lo = self.number()?;
        let hi = if *self.peek() == Tok::DotDot {
            self.bump();
            self.number()?
        } else {
            lo
        };
        self.expect(Tok::FatArrow)?;
        let mut chain = vec![self.stage()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            chain.push(self.stage()?);
        }
        let case = Case { lo, hi, chain };
        check_case(&case).map_err(|e| err(start, e.into()))?;
        Ok(case)
    }

    fn stage(&mut self) -> Result<Stage, ParseError> {
        let (tok, pos) = self.bump();
        let name = match tok {
            Tok::Ident(name) => name,
            other => {
                return Err(err(
                    pos,
                    ParseErrorKind::Unexpected {
                        expected: "a stage".into(),
                        found: other.describe(),
                    },
                ))
            }
        };
        let stage = match name.as_str() {
            "const" => {
                self.expect(Tok::LParen)?;
                let c = self.number()?;
                self.expect(Tok::RParen)?;
                Stage::Const(c)
            }
            "lin" => {
                self.expect(Tok::LParen)?;
                let in_lo = self.number()?;
                self.expect(Tok::DotDot)?;
                let in_hi = self.number()?;
                self.expect(Tok::Arrow)?;
                let out_lo = self.number()?;
                self.expect(Tok::DotDot)?;
                let out_hi = self.number()?;
                self.expect(Tok::RParen)?;
                Stage::Lin {
                    in_lo,
                    in_hi,
                    out_lo,
                    out_hi,
                }
            }
            "clamp" => {
                self.expect(Tok::LParen)?;
                let lo = self.number()?;
                self.expect(Tok::Comma)?;
                let hi = self.number()?;
                self.expect(Tok::RParen)?;
                Stage::Clamp { lo, hi }
            }
            "sqrt" => Stage::Sqrt,
            "sq" => Stage::Sq,
            "neg" => Stage::Neg,
            _ => return Err(err(pos, ParseErrorKind::UnknownStage(name))),
        };
        check_stage(&stage).map_err(|e| err(pos, e.into()))?;
        Ok(stage)
    }
}

/// Parses and validates mapping source text.
pub fn parse(text: &str) -> Result<MappingProgram, ParseError> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.program()
}
