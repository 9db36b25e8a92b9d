use std::fmt;

use super::{BranchKind, Condition, Expr, Instruction, Location, Predicate, Program, Provenance, Quantifier, Value};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Reg(r) => write!(f, "{r}"),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Label(l) => f.write_str(l),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { '+' } else { '-' };
                write!(f, "{a} {op} ")?;
                if matches!(**b, Expr::Add(..) | Expr::Sub(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Load { dest, addr } => write!(f, "{dest} = Ld [{addr}]"),
            Instruction::Store { addr, data } => match data {
                Expr::Add(..) | Expr::Sub(..) => write!(f, "St [{addr}] ({data})"),
                _ => write!(f, "St [{addr}] {data}"),
            },
            Instruction::RegOp { dest, rhs } => write!(f, "{dest} = {rhs}"),
            Instruction::Branch { kind, cond, target } => {
                let mnemonic = match kind {
                    BranchKind::Nez => "bnez",
                    BranchKind::Eqz => "beqz",
                };
                write!(f, "{mnemonic} {cond}, {}", target.label)
            }
            Instruction::Fence(fence) => write!(f, "{fence}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Label(l) => f.write_str(l),
        }
    }
}

struct PredicateIn<'a> {
    pred: &'a Predicate,
    program: &'a Program,
}

impl fmt::Display for PredicateIn<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |p| PredicateIn { pred: p, program: self.program };
        let grouped = |p: &Predicate| matches!(p, Predicate::And(_) | Predicate::Or(_));
        match self.pred {
            Predicate::True => f.write_str("true"),
            Predicate::Eq(loc @ Location::Reg { .. }, v) => write!(f, "{}={v}", self.program.location_name(loc)),
            Predicate::Eq(Location::Mem(l), v) => write!(f, "[{l}]={v}"),
            Predicate::Not(p) if grouped(p) => write!(f, "~({})", sub(p)),
            Predicate::Not(p) => write!(f, "~{}", sub(p)),
            Predicate::And(ps) | Predicate::Or(ps) => {
                let sep = if matches!(self.pred, Predicate::And(_)) { " /\\ " } else { " \\/ " };
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    if grouped(p) {
                        write!(f, "({})", sub(p))?;
                    } else {
                        write!(f, "{}", sub(p))?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl Program {
    /// The condition line, e.g. `exists (P2:r1=1 /\ P2:r2=0)`.
    pub fn condition_text(&self) -> String {
        let Condition { quantifier, predicate } = &self.condition;
        let q = match quantifier {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        };
        format!("{q} ({})", PredicateIn { pred: predicate, program: self })
    }
}

/// Canonical litmus source; parsing it yields an identical program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "test \"{}\"", self.name)?;
        let init: Vec<String> = self.init.iter().map(|(l, v)| format!("[{l}]={v}")).collect();
        writeln!(f, "init {{ {} }}", init.join("; "))?;
        for t in &self.threads {
            let mut items = Vec::new();
            for (i, instr) in t.code.iter().enumerate() {
                let labels: String =
                    t.labels.iter().filter(|(_, &at)| at == i).map(|(l, _)| format!("{l}: ")).collect();
                items.push(format!("{labels}{instr}"));
            }
            for (l, _) in t.labels.iter().filter(|(_, &at)| at == t.code.len()) {
                items.push(format!("{l}:"));
            }
            writeln!(f, "thread {} {{ {} }}", t.name, items.join(" ; "))?;
        }
        writeln!(f, "{}", self.condition_text())?;
        for provenance in [Provenance::Published, Provenance::Derived] {
            let items: Vec<String> = self
                .expectations
                .iter()
                .filter(|e| e.provenance == provenance)
                .map(|e| format!("{}={}", e.model, e.verdict))
                .collect();
            if !items.is_empty() {
                let tag = if provenance == Provenance::Derived { "derived " } else { "" };
                writeln!(f, "expect {tag}{}", items.join(" "))?;
            }
        }
        Ok(())
    }
}
