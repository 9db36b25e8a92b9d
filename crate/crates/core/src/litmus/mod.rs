//! The litmus instruction set, program representation, parser and printer.
//!
//! A litmus program is a handful of threads, each a straight-line sequence of
//! loads, stores, register operations, forward branches and fences, plus an
//! initial memory and a predicate over the final state.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::Model;

pub use parse::{parse_litmus, ParseError, ParseErrorKind};

/// Base of the address range handed out to labels.
pub const ADDRESS_BASE: i64 = 0x100;
/// Distance between consecutive label addresses.
pub const ADDRESS_STRIDE: i64 = 8;
/// Upper bound on distinct labels one program may bind.
pub const MAX_LABELS: usize = 1 << 20;

/// A thread-local register, written `r<N>` in litmus source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reg(pub u16);

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl Reg {
    /// Parses `r<digits>`.
    pub fn from_name(name: &str) -> Option<Reg> {
        let digits = name.strip_prefix('r')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(Reg)
    }
}

/// Operand expression: registers, literals and address labels combined with `+` and `-`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Reg(Reg),
    Lit(i64),
    Label(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl std::ops::Add for Expr {
    type Output = Expr;

    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;

    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl Expr {
    /// Evaluates with a total register valuation. Arithmetic wraps.
    pub fn eval(&self, layout: &AddressLayout, reg: &mut impl FnMut(Reg) -> i64) -> i64 {
        match self {
            Expr::Reg(r) => reg(*r),
            Expr::Lit(v) => *v,
            Expr::Label(l) => layout.address_of(l).unwrap_or(0),
            Expr::Add(a, b) => a.eval(layout, reg).wrapping_add(b.eval(layout, reg)),
            Expr::Sub(a, b) => a.eval(layout, reg).wrapping_sub(b.eval(layout, reg)),
        }
    }

    /// Evaluates under partial knowledge; `None` if any register operand is unknown.
    pub fn try_eval(&self, layout: &AddressLayout, reg: &mut impl FnMut(Reg) -> Option<i64>) -> Option<i64> {
        match self {
            Expr::Reg(r) => reg(*r),
            Expr::Lit(v) => Some(*v),
            Expr::Label(l) => Some(layout.address_of(l).unwrap_or(0)),
            Expr::Add(a, b) => {
                let x = a.try_eval(layout, reg);
                let y = b.try_eval(layout, reg);
                Some(x?.wrapping_add(y?))
            }
            Expr::Sub(a, b) => {
                let x = a.try_eval(layout, reg);
                let y = b.try_eval(layout, reg);
                Some(x?.wrapping_sub(y?))
            }
        }
    }

    /// Registers read, in first-occurrence order without duplicates.
    pub fn registers(&self) -> Vec<Reg> {
        let mut out = Vec::new();
        self.collect_registers(&mut out);
        out
    }

    fn collect_registers(&self, out: &mut Vec<Reg>) {
        match self {
            Expr::Reg(r) => {
                if !out.contains(r) {
                    out.push(*r);
                }
            }
            Expr::Lit(_) | Expr::Label(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.collect_registers(out);
                b.collect_registers(out);
            }
        }
    }

    pub(crate) fn collect_labels(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Label(l) => {
                out.insert(l.clone());
            }
            Expr::Reg(_) | Expr::Lit(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    pub(crate) fn collect_literals(&self, out: &mut BTreeSet<i64>) {
        match self {
            Expr::Lit(v) => {
                out.insert(*v);
            }
            Expr::Reg(_) | Expr::Label(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.collect_literals(out);
                b.collect_literals(out);
            }
        }
    }

    /// Replaces every label by its bound address.
    pub fn bind(&self, layout: &AddressLayout) -> Expr {
        match self {
            Expr::Label(l) => Expr::Lit(layout.address_of(l).unwrap_or(0)),
            Expr::Reg(_) | Expr::Lit(_) => self.clone(),
            Expr::Add(a, b) => a.bind(layout) + b.bind(layout),
            Expr::Sub(a, b) => a.bind(layout) - b.bind(layout),
        }
    }

    /// The value of the expression if it does not depend on any register once
    /// register terms are summed (so `a + r1 - r1` is constant).
    pub fn constant_value(&self, layout: &AddressLayout) -> Option<i64> {
        let mut coeffs: BTreeMap<Reg, i64> = BTreeMap::new();
        let constant = self.linear(layout, 1, &mut coeffs);
        coeffs.values().all(|&c| c == 0).then_some(constant)
    }

    fn linear(&self, layout: &AddressLayout, sign: i64, coeffs: &mut BTreeMap<Reg, i64>) -> i64 {
        match self {
            Expr::Reg(r) => {
                *coeffs.entry(*r).or_default() += sign;
                0
            }
            Expr::Lit(v) => v.wrapping_mul(sign),
            Expr::Label(l) => layout.address_of(l).unwrap_or(0).wrapping_mul(sign),
            Expr::Add(a, b) => a.linear(layout, sign, coeffs).wrapping_add(b.linear(layout, sign, coeffs)),
            Expr::Sub(a, b) => a.linear(layout, sign, coeffs).wrapping_add(b.linear(layout, -sign, coeffs)),
        }
    }
}

/// Register valuation used by [`eval_expr`]; absent registers read as zero.
pub type RegisterFile = BTreeMap<Reg, i64>;

/// Evaluates `e` under `regs`. Unwritten registers read 0 and arithmetic wraps, so
/// this never fails.
pub fn eval_expr(e: &Expr, regs: &RegisterFile, layout: &AddressLayout) -> i64 {
    e.eval(layout, &mut |r| regs.get(&r).copied().unwrap_or(0))
}

/// Class of memory access a fence orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Access {
    Load,
    Store,
}

impl Access {
    fn letter(self) -> char {
        match self {
            Access::Load => 'L',
            Access::Store => 'S',
        }
    }
}

/// `FenceXY`: older accesses of class `from` before younger accesses of class `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fence {
    pub from: Access,
    pub to: Access,
}

impl fmt::Display for Fence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fence{}{}", self.from.letter(), self.to.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    /// Taken when the condition is non-zero.
    Nez,
    /// Taken when the condition is zero.
    Eqz,
}

impl BranchKind {
    pub fn taken(self, value: i64) -> bool {
        match self {
            BranchKind::Nez => value != 0,
            BranchKind::Eqz => value == 0,
        }
    }
}

/// A resolved forward branch target.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Target {
    pub label: String,
    /// Instruction index the label names; may equal the thread length.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    Load { dest: Reg, addr: Expr },
    Store { addr: Expr, data: Expr },
    RegOp { dest: Reg, rhs: Expr },
    Branch { kind: BranchKind, cond: Expr, target: Target },
    Fence(Fence),
}

impl Instruction {
    pub fn is_memory(&self) -> bool {
        matches!(self, Instruction::Load { .. } | Instruction::Store { .. })
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Instruction::Load { .. })
    }

    pub fn is_store(&self) -> bool {
        matches!(self, Instruction::Store { .. })
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, Instruction::Branch { .. })
    }

    /// Access class of a load or store.
    pub fn access(&self) -> Option<Access> {
        match self {
            Instruction::Load { .. } => Some(Access::Load),
            Instruction::Store { .. } => Some(Access::Store),
            _ => None,
        }
    }

    /// Destination register, if any.
    pub fn dest(&self) -> Option<Reg> {
        match self {
            Instruction::Load { dest, .. } | Instruction::RegOp { dest, .. } => Some(*dest),
            _ => None,
        }
    }

    pub fn address_expr(&self) -> Option<&Expr> {
        match self {
            Instruction::Load { addr, .. } | Instruction::Store { addr, .. } => Some(addr),
            _ => None,
        }
    }

    /// Copy with every label operand replaced by its address.
    pub fn bind(&self, layout: &AddressLayout) -> Instruction {
        match self {
            Instruction::Load { dest, addr } => Instruction::Load { dest: *dest, addr: addr.bind(layout) },
            Instruction::Store { addr, data } => {
                Instruction::Store { addr: addr.bind(layout), data: data.bind(layout) }
            }
            Instruction::RegOp { dest, rhs } => Instruction::RegOp { dest: *dest, rhs: rhs.bind(layout) },
            Instruction::Branch { kind, cond, target } => {
                Instruction::Branch { kind: *kind, cond: cond.bind(layout), target: target.clone() }
            }
            Instruction::Fence(f) => Instruction::Fence(*f),
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        match self {
            Instruction::Load { addr, .. } => vec![addr],
            Instruction::Store { addr, data } => vec![addr, data],
            Instruction::RegOp { rhs, .. } => vec![rhs],
            Instruction::Branch { cond, .. } => vec![cond],
            Instruction::Fence(_) => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub code: Vec<Instruction>,
    /// Label name to the instruction index it precedes.
    pub labels: BTreeMap<String, usize>,
}

impl Thread {
    pub fn writes(&self, reg: Reg) -> bool {
        self.code.iter().any(|i| i.dest() == Some(reg))
    }
}

/// A value in `init` or in a condition: an integer or an address label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Label(String),
}

impl Value {
    pub fn resolve(&self, layout: &AddressLayout) -> i64 {
        match self {
            Value::Int(v) => *v,
            Value::Label(l) => layout.address_of(l).unwrap_or(0),
        }
    }
}

/// Something observable in a final state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Reg { thread: usize, reg: Reg },
    Mem(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    True,
    Eq(Location, Value),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn holds(&self, lookup: &impl Fn(&Location) -> i64, layout: &AddressLayout) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Eq(loc, v) => lookup(loc) == v.resolve(layout),
            Predicate::Not(p) => !p.holds(lookup, layout),
            Predicate::And(ps) => ps.iter().all(|p| p.holds(lookup, layout)),
            Predicate::Or(ps) => ps.iter().any(|p| p.holds(lookup, layout)),
        }
    }

    fn collect(&self, locs: &mut BTreeSet<Location>, values: &mut Vec<Value>) {
        match self {
            Predicate::True => {}
            Predicate::Eq(l, v) => {
                locs.insert(l.clone());
                values.push(v.clone());
            }
            Predicate::Not(p) => p.collect(locs, values),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect(locs, values)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    /// The target outcome is any final state satisfying the predicate.
    Exists,
    /// The target outcome is any final state violating the predicate.
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub quantifier: Quantifier,
    pub predicate: Predicate,
}

impl Condition {
    /// Whether a final state with values `lookup` is the condition's target outcome.
    pub fn is_target(&self, lookup: &impl Fn(&Location) -> i64, layout: &AddressLayout) -> bool {
        let holds = self.predicate.holds(lookup, layout);
        match self.quantifier {
            Quantifier::Exists => holds,
            Quantifier::Forall => !holds,
        }
    }

    /// Locations the predicate mentions; these make up an outcome.
    pub fn locations(&self) -> BTreeSet<Location> {
        let mut locs = BTreeSet::new();
        self.predicate.collect(&mut locs, &mut Vec::new());
        locs
    }

    fn values(&self) -> Vec<Value> {
        let mut values = Vec::new();
        self.predicate.collect(&mut BTreeSet::new(), &mut values);
        values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Allowed,
    Forbidden,
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expect::Allowed => "allowed",
            Expect::Forbidden => "forbidden",
        })
    }
}

impl Expect {
    pub fn from_allowed(allowed: bool) -> Expect {
        if allowed {
            Expect::Allowed
        } else {
            Expect::Forbidden
        }
    }
}

/// Where an expected verdict comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated alongside the published test.
    Published,
    /// Worked out by hand from the model definitions.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expectation {
    pub model: Model,
    pub verdict: Expect,
    pub provenance: Provenance,
}

/// A parsed litmus test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub threads: Vec<Thread>,
    /// Initial memory by label. Every label the program mentions has an entry.
    pub init: BTreeMap<String, Value>,
    pub condition: Condition,
    pub expectations: Vec<Expectation>,
    layout: Option<AddressLayout>,
}

impl Program {
    pub fn new(
        name: String,
        threads: Vec<Thread>,
        init: BTreeMap<String, Value>,
        condition: Condition,
        expectations: Vec<Expectation>,
    ) -> Program {
        Program { name, threads, init, condition, expectations, layout: None }
    }

    /// Every address label mentioned anywhere in the program.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.init.keys().cloned().collect();
        for v in self.init.values() {
            if let Value::Label(l) = v {
                out.insert(l.clone());
            }
        }
        for t in &self.threads {
            for i in &t.code {
                for e in i.exprs() {
                    e.collect_labels(&mut out);
                }
            }
        }
        for loc in self.condition.locations() {
            if let Location::Mem(l) = loc {
                out.insert(l);
            }
        }
        for v in self.condition.values() {
            if let Value::Label(l) = v {
                out.insert(l);
            }
        }
        out
    }

    /// The bound address layout, computing it when the program was not resolved yet.
    pub fn layout(&self) -> Result<AddressLayout, Error> {
        match &self.layout {
            Some(l) => Ok(l.clone()),
            None => AddressLayout::assign(self.labels()),
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.layout.is_some()
    }

    pub fn expectation(&self, model: Model) -> Option<Expectation> {
        self.expectations.iter().rev().find(|e| e.model == model).copied()
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.name == name)
    }

    /// Initial memory keyed by bound address.
    pub fn initial_memory(&self, layout: &AddressLayout) -> BTreeMap<i64, i64> {
        self.init.iter().filter_map(|(l, v)| layout.address_of(l).map(|a| (a, v.resolve(layout)))).collect()
    }

    /// Threads with every label operand bound to its address.
    pub fn bound_code(&self, layout: &AddressLayout) -> Vec<Vec<Instruction>> {
        self.threads.iter().map(|t| t.code.iter().map(|i| i.bind(layout)).collect()).collect()
    }

    /// Finite set of values an unconstrained load may be assumed to return: zero,
    /// every literal, every initial value, every label address and every value the
    /// condition mentions.
    pub fn value_domain(&self, layout: &AddressLayout) -> BTreeSet<i64> {
        let mut out = BTreeSet::from([0]);
        for t in &self.threads {
            for i in &t.code {
                for e in i.exprs() {
                    e.collect_literals(&mut out);
                }
            }
        }
        out.extend(self.init.values().map(|v| v.resolve(layout)));
        out.extend(layout.iter().map(|(_, a)| a));
        out.extend(self.condition.values().iter().map(|v| v.resolve(layout)));
        out
    }

    pub fn memory_instruction_count(&self) -> usize {
        self.threads.iter().map(|t| t.code.iter().filter(|i| i.is_memory()).count()).sum()
    }

    /// Renders a location with thread names, e.g. `P2:r1` or `[a]`.
    pub fn location_name(&self, loc: &Location) -> String {
        match loc {
            Location::Reg { thread, reg } => format!("{}:{}", self.threads[*thread].name, reg),
            Location::Mem(l) => format!("[{l}]"),
        }
    }
}

/// Binds each address label to a distinct aligned integer.
pub fn resolve_addresses(program: Program) -> Result<Program, Error> {
    let layout = AddressLayout::assign(program.labels())?;
    Ok(Program { layout: Some(layout), ..program })
}

/// Label-to-address binding: labels sorted lexicographically and assigned
/// `0x100, 0x108, 0x110, ...`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressLayout {
    by_label: BTreeMap<String, i64>,
}

impl AddressLayout {
    pub fn assign(labels: impl IntoIterator<Item = String>) -> Result<AddressLayout, Error> {
        let sorted: BTreeSet<String> = labels.into_iter().collect();
        if sorted.len() > MAX_LABELS {
            return Err(Error::AddressSpace(sorted.len()));
        }
        let by_label =
            sorted.into_iter().enumerate().map(|(i, l)| (l, ADDRESS_BASE + ADDRESS_STRIDE * i as i64)).collect();
        Ok(AddressLayout { by_label })
    }

    pub fn address_of(&self, label: &str) -> Option<i64> {
        self.by_label.get(label).copied()
    }

    pub fn label_at(&self, addr: i64) -> Option<&str> {
        if addr < ADDRESS_BASE || (addr - ADDRESS_BASE) % ADDRESS_STRIDE != 0 {
            return None;
        }
        let idx = ((addr - ADDRESS_BASE) / ADDRESS_STRIDE) as usize;
        self.by_label.keys().nth(idx).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.by_label.iter().map(|(l, a)| (l.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.by_label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_label.is_empty()
    }

    /// `a` for a label address, hex otherwise.
    pub fn describe(&self, addr: i64) -> String {
        match self.label_at(addr) {
            Some(l) => l.to_string(),
            None => format!("{addr:#x}"),
        }
    }
}
