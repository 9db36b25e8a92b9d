use std::collections::BTreeMap;

use thiserror::Error;

use super::{
    Access, BranchKind, Condition, Expect, Expectation, Expr, Fence, Instruction, Location, Predicate, Program,
    Provenance, Quantifier, Reg, Target, Thread, Value,
};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("no threads")]
    NoThreads,
    #[error("thread {0} has no instructions")]
    EmptyThread(String),
    #[error("duplicate thread {0}")]
    DuplicateThread(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("undefined label {0}")]
    UndefinedLabel(String),
    #[error("backward branch to {0}")]
    BackwardBranch(String),
    #[error("unknown fence class {0}")]
    UnknownFenceClass(String),
    #[error("unknown thread {0}")]
    UnknownThread(String),
    #[error("register {reg} is never written by thread {thread}")]
    UnwrittenRegister { thread: String, reg: String },
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("unknown verdict {0}")]
    UnknownVerdict(String),
    #[error("duplicate condition")]
    DuplicateCondition,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Eq,
    Semi,
    Comma,
    Colon,
    Plus,
    Minus,
    And,
    Or,
    Not,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Eq => "=",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::And => "/\\",
            Tok::Or => "\\/",
            Tok::Not => "~",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, kind: ParseErrorKind::Syntax(msg) };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |tok: Tok, out: &mut Vec<Spanned>| out.push(Spanned { tok, line: tl, col: tc });
        match c {
            '\n' => {
                push(Tok::Newline, &mut out);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'\\') => {
                push(Tok::And, &mut out);
                i += 2;
                col += 2;
                continue;
            }
            '\\' if chars.get(i + 1) == Some(&'/') => {
                push(Tok::Or, &mut out);
                i += 2;
                col += 2;
                continue;
            }
            '"' => {
                let mut j = i + 1;
                let mut s = String::new();
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    s.push(chars[j]);
                    j += 1;
                }
                if chars.get(j) != Some(&'"') {
                    return Err(err(tl, tc, "unterminated string".into()));
                }
                push(Tok::Str(s), &mut out);
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            '{' => push(Tok::LBrace, &mut out),
            '}' => push(Tok::RBrace, &mut out),
            '[' => push(Tok::LBracket, &mut out),
            ']' => push(Tok::RBracket, &mut out),
            '(' => push(Tok::LParen, &mut out),
            ')' => push(Tok::RParen, &mut out),
            '=' => push(Tok::Eq, &mut out),
            ';' => push(Tok::Semi, &mut out),
            ',' => push(Tok::Comma, &mut out),
            ':' => push(Tok::Colon, &mut out),
            '+' => push(Tok::Plus, &mut out),
            '-' | '\u{2212}' => push(Tok::Minus, &mut out),
            '~' => push(Tok::Not, &mut out),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let value = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                    i64::from_str_radix(hex, 16)
                } else {
                    text.parse()
                }
                .map_err(|_| err(tl, tc, format!("bad integer `{text}`")))?;
                push(Tok::Int(value), &mut out);
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(Tok::Ident(chars[i..j].iter().collect()), &mut out);
                col += j - i;
                i = j;
                continue;
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
        i += 1;
        col += 1;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    pending: Vec<(String, (usize, usize))>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, pos: (usize, usize), kind: ParseErrorKind) -> ParseError {
        ParseError { line: pos.0, col: pos.1, kind }
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        self.error_at(self.here(), kind)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(ParseErrorKind::Syntax(format!("expected {wanted}, found {}", self.peek().describe())))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", tok.symbol())))
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Semi | Tok::Comma) {
            self.bump();
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut name = String::from("unnamed");
        let mut init: BTreeMap<String, Value> = BTreeMap::new();
        let mut threads: Vec<Thread> = Vec::new();
        let mut condition: Option<(Condition, (usize, usize))> = None;
        let mut expectations = Vec::new();

        loop {
            self.skip_separators();
            let at = self.here();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) => match kw.as_str() {
                    "test" => {
                        self.bump();
                        name = match self.bump() {
                            Tok::Str(s) | Tok::Ident(s) => s,
                            _ => return Err(self.error_at(at, ParseErrorKind::Syntax("expected test name".into()))),
                        };
                    }
                    "init" => {
                        self.bump();
                        self.init_block(&mut init)?;
                    }
                    "thread" => {
                        self.bump();
                        let t = self.thread()?;
                        if threads.iter().any(|o| o.name == t.name) {
                            return Err(self.error_at(at, ParseErrorKind::DuplicateThread(t.name)));
                        }
                        threads.push(t);
                    }
                    "exists" | "forall" => {
                        self.bump();
                        if condition.is_some() {
                            return Err(self.error_at(at, ParseErrorKind::DuplicateCondition));
                        }
                        let quantifier = if kw == "exists" { Quantifier::Exists } else { Quantifier::Forall };
                        let predicate = self.disjunction()?;
                        condition = Some((Condition { quantifier, predicate }, at));
                    }
                    "expect" => {
                        self.bump();
                        self.expect_line(&mut expectations)?;
                    }
                    _ => return Err(self.unexpected("`test`, `init`, `thread`, `exists`, `forall` or `expect`")),
                },
                _ => return Err(self.unexpected("a top-level item")),
            }
        }

        if threads.is_empty() {
            return Err(self.error(ParseErrorKind::NoThreads));
        }
        let (condition, cond_at) = condition
            .unwrap_or((Condition { quantifier: Quantifier::Exists, predicate: Predicate::True }, self.here()));
        let mut condition = condition;
        self.resolve_threads(&mut condition.predicate, &threads)?;
        for loc in condition.locations() {
            if let Location::Reg { thread, reg } = loc {
                if !threads[thread].writes(reg) {
                    return Err(self.error_at(
                        cond_at,
                        ParseErrorKind::UnwrittenRegister {
                            thread: threads[thread].name.clone(),
                            reg: reg.to_string(),
                        },
                    ));
                }
            }
        }
        let mut program = Program::new(name, threads, init, condition, expectations);
        for label in program.labels() {
            program.init.entry(label).or_insert(Value::Int(0));
        }
        Ok(program)
    }

    /// Condition atoms may name threads declared further down the file, so they
    /// are parsed with placeholder indices into `pending` and patched here.
    fn resolve_threads(&self, pred: &mut Predicate, threads: &[Thread]) -> PResult<()> {
        match pred {
            Predicate::True | Predicate::Eq(Location::Mem(_), _) => Ok(()),
            Predicate::Eq(Location::Reg { thread, .. }, _) => {
                let (name, at) = &self.pending[*thread];
                *thread = threads
                    .iter()
                    .position(|t| &t.name == name)
                    .ok_or_else(|| self.error_at(*at, ParseErrorKind::UnknownThread(name.clone())))?;
                Ok(())
            }
            Predicate::Not(p) => self.resolve_threads(p, threads),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter_mut().try_for_each(|p| self.resolve_threads(p, threads)),
        }
    }

    fn init_block(&mut self, init: &mut BTreeMap<String, Value>) -> PResult<()> {
        self.skip_newlines();
        self.expect(Tok::LBrace)?;
        loop {
            self.skip_separators();
            if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok(());
            }
            let bracketed = *self.peek() == Tok::LBracket;
            if bracketed {
                self.bump();
            }
            let label = self.ident("an address label")?;
            if bracketed {
                self.expect(Tok::RBracket)?;
            }
            self.expect(Tok::Eq)?;
            let v = self.value()?;
            init.insert(label, v);
        }
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Value::Int(v))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(v) => Ok(Value::Int(-v)),
                    _ => Err(self.unexpected("an integer")),
                }
            }
            Tok::Ident(l) => {
                self.bump();
                Ok(Value::Label(l))
            }
            _ => Err(self.unexpected("an integer or address label")),
        }
    }

    fn thread(&mut self) -> PResult<Thread> {
        let name = self.ident("a thread name")?;
        self.skip_newlines();
        self.expect(Tok::LBrace)?;
        let mut code = Vec::new();
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        // (instruction index, label, position) for later resolution
        let mut branches: Vec<(usize, String, (usize, usize))> = Vec::new();
        loop {
            self.skip_separators();
            if *self.peek() == Tok::RBrace {
                self.bump();
                break;
            }
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            while let (Tok::Ident(l), Tok::Colon) = (self.peek().clone(), self.peek_at(1).clone()) {
                let at = self.here();
                self.bump();
                self.bump();
                if labels.insert(l.clone(), code.len()).is_some() {
                    return Err(self.error_at(at, ParseErrorKind::DuplicateLabel(l)));
                }
                self.skip_newlines();
            }
            if matches!(self.peek(), Tok::RBrace | Tok::Semi | Tok::Newline | Tok::Comma) {
                continue;
            }
            self.instruction(&mut code, &mut branches)?;
        }
        if code.is_empty() {
            return Err(self.error(ParseErrorKind::EmptyThread(name)));
        }
        for (idx, label, at) in branches {
            let target =
                *labels.get(&label).ok_or_else(|| self.error_at(at, ParseErrorKind::UndefinedLabel(label.clone())))?;
            if target <= idx {
                return Err(self.error_at(at, ParseErrorKind::BackwardBranch(label)));
            }
            if let Instruction::Branch { target: t, .. } = &mut code[idx] {
                t.index = target;
            }
        }
        Ok(Thread { name, code, labels })
    }

    fn instruction(
        &mut self,
        code: &mut Vec<Instruction>,
        branches: &mut Vec<(usize, String, (usize, usize))>,
    ) -> PResult<()> {
        let at = self.here();
        let word = self.ident("an instruction")?;
        let instr = match word.as_str() {
            "St" | "st" => {
                self.expect(Tok::LBracket)?;
                let addr = self.expr()?;
                self.expect(Tok::RBracket)?;
                let data = self.expr()?;
                Instruction::Store { addr, data }
            }
            "bnez" | "beqz" => {
                let kind = if word == "bnez" { BranchKind::Nez } else { BranchKind::Eqz };
                let cond = self.expr()?;
                self.expect(Tok::Comma)?;
                let label_at = self.here();
                let label = self.ident("a branch label")?;
                branches.push((code.len(), label.clone(), label_at));
                Instruction::Branch { kind, cond, target: Target { label, index: 0 } }
            }
            w if w.starts_with("Fence") || w.starts_with("fence") => {
                let fences = fence_sequence(&w[5..])
                    .ok_or_else(|| self.error_at(at, ParseErrorKind::UnknownFenceClass(word.clone())))?;
                code.extend(fences.into_iter().map(Instruction::Fence));
                return Ok(());
            }
            w => {
                let dest = Reg::from_name(w).ok_or_else(|| {
                    self.error_at(at, ParseErrorKind::Syntax(format!("expected an instruction, found `{w}`")))
                })?;
                self.expect(Tok::Eq)?;
                let is_load =
                    matches!(self.peek(), Tok::Ident(s) if s == "Ld" || s == "ld") && *self.peek_at(1) == Tok::LBracket;
                if is_load {
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let addr = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    Instruction::Load { dest, addr }
                } else {
                    Instruction::RegOp { dest, rhs: self.expr()? }
                }
            }
        };
        code.push(instr);
        if !matches!(self.peek(), Tok::Semi | Tok::Newline | Tok::RBrace | Tok::Eof) {
            return Err(self.unexpected("`;`, end of line or `}`"));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(v))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(v) => Ok(Expr::Lit(v.wrapping_neg())),
                    _ => Err(self.unexpected("an integer")),
                }
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match Reg::from_name(&s) {
                    Some(r) => Expr::Reg(r),
                    None => Expr::Label(s),
                })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("an operand")),
        }
    }

    fn disjunction(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Or {
            self.bump();
            self.skip_newlines();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::Or(parts) })
    }

    fn conjunction(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            self.skip_newlines();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::And(parts) })
    }

    fn unary(&mut self) -> PResult<Predicate> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Predicate::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.bump();
                self.skip_newlines();
                let p = self.disjunction()?;
                self.skip_newlines();
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::LBracket => {
                self.bump();
                let l = self.ident("an address label")?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Eq)?;
                Ok(Predicate::Eq(Location::Mem(l), self.value()?))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Predicate::True)
            }
            Tok::Ident(_) => {
                let at = self.here();
                let thread = self.ident("a thread name")?;
                self.expect(Tok::Colon)?;
                let reg_at = self.here();
                let reg_name = self.ident("a register")?;
                let reg = Reg::from_name(&reg_name).ok_or_else(|| {
                    self.error_at(reg_at, ParseErrorKind::Syntax(format!("`{reg_name}` is not a register")))
                })?;
                self.expect(Tok::Eq)?;
                let value = self.value()?;
                self.pending.push((thread, at));
                Ok(Predicate::Eq(Location::Reg { thread: self.pending.len() - 1, reg }, value))
            }
            _ => Err(self.unexpected("a condition atom")),
        }
    }

    fn expect_line(&mut self, out: &mut Vec<Expectation>) -> PResult<()> {
        let mut provenance = Provenance::Published;
        if matches!(self.peek(), Tok::Ident(s) if s == "derived") {
            self.bump();
            provenance = Provenance::Derived;
        }
        while !matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Semi) {
            let at = self.here();
            let m = self.ident("a model name")?;
            let model: Model = m.parse().map_err(|_| self.error_at(at, ParseErrorKind::UnknownModel(m.clone())))?;
            self.expect(Tok::Eq)?;
            let vat = self.here();
            let v = self.ident("`allowed` or `forbidden`")?;
            let verdict = match v.as_str() {
                "allowed" => Expect::Allowed,
                "forbidden" => Expect::Forbidden,
                _ => return Err(self.error_at(vat, ParseErrorKind::UnknownVerdict(v))),
            };
            out.push(Expectation { model, verdict, provenance });
        }
        Ok(())
    }
}

/// Basic fences making up a fence mnemonic suffix (`LL`, `Acq`, `Full`, ...).
fn fence_sequence(suffix: &str) -> Option<Vec<Fence>> {
    use Access::{Load as L, Store as S};
    let f = |from, to| Fence { from, to };
    Some(match suffix {
        "LL" => vec![f(L, L)],
        "LS" => vec![f(L, S)],
        "SL" => vec![f(S, L)],
        "SS" => vec![f(S, S)],
        "Acq" => vec![f(L, L), f(L, S)],
        "Rel" => vec![f(L, S), f(S, S)],
        "Full" => vec![f(L, L), f(L, S), f(S, L), f(S, S)],
        _ => return None,
    })
}

/// Parses litmus source text into a [`Program`]. Branch labels are resolved;
/// addresses are not (see [`super::resolve_addresses`]).
pub fn parse_litmus(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source)?;
    Parser { toks, pos: 0, pending: Vec::new() }.program()
}
