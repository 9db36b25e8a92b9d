//! Register dependencies and preserved program order.
//!
//! Everything here works on one thread's committed path at a time. Addresses
//! must already be resolved, because most ordering cases compare addresses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::litmus::{Access, Instruction, Reg};
use crate::model::{ModelConfig, SameAddrLoadLoad};

/// Identifies an instruction instance by thread and position in the committed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstId {
    pub thread: usize,
    pub index: usize,
}

/// Where a load takes its value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RfSource {
    /// The initial value of the load's address.
    Init,
    Store(InstId),
}

/// An instruction on a committed path with its resolved operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrInstance {
    pub id: InstId,
    /// Static instruction index in the thread.
    pub pc: usize,
    pub instr: Instruction,
    /// Resolved address of a load or store.
    pub addr: Option<i64>,
    /// Load result, register-op result, store data or branch condition value.
    pub value: Option<i64>,
    /// Read-from source of a load.
    pub rf: Option<RfSource>,
}

impl InstrInstance {
    fn same_address(&self, other: &InstrInstance) -> bool {
        self.addr.is_some() && self.addr == other.addr
    }
}

pub fn read_set(i: &Instruction) -> BTreeSet<Reg> {
    match i {
        Instruction::Load { addr, .. } => addr.registers().into_iter().collect(),
        Instruction::Store { addr, data } => addr.registers().into_iter().chain(data.registers()).collect(),
        Instruction::RegOp { rhs, .. } => rhs.registers().into_iter().collect(),
        Instruction::Branch { cond, .. } => cond.registers().into_iter().collect(),
        Instruction::Fence(_) => BTreeSet::new(),
    }
}

pub fn write_set(i: &Instruction) -> BTreeSet<Reg> {
    i.dest().into_iter().collect()
}

pub fn addr_read_set(i: &Instruction) -> BTreeSet<Reg> {
    i.address_expr().map(|e| e.registers().into_iter().collect()).unwrap_or_default()
}

/// A relation over the positions `0..n` of one path, stored as bit rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    rows: Vec<u64>,
}

impl Relation {
    pub const MAX_SIZE: usize = 64;

    pub fn new(n: usize) -> Relation {
        assert!(n <= Self::MAX_SIZE, "paths longer than {} instructions are not supported", Self::MAX_SIZE);
        Relation { n, rows: vec![0; n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.rows[i] >> j & 1 == 1
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.rows[i] |= 1 << j;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| self.contains(i, j)).map(move |j| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Positions related to `j` from the left.
    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.contains(i, j))
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    /// Transitive closure in place.
    pub fn close(&mut self) {
        for k in 0..self.n {
            let row_k = self.rows[k];
            for i in 0..self.n {
                if self.rows[i] >> k & 1 == 1 {
                    self.rows[i] |= row_k;
                }
            }
        }
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// For each position, the nearest older writer of each register it reads through `reads`.
fn dependencies(path: &[InstrInstance], reads: impl Fn(&Instruction) -> BTreeSet<Reg>) -> Relation {
    let mut rel = Relation::new(path.len());
    let mut last_writer: BTreeMap<Reg, usize> = BTreeMap::new();
    for (j, inst) in path.iter().enumerate() {
        for r in reads(&inst.instr) {
            if let Some(&i) = last_writer.get(&r) {
                rel.insert(i, j);
            }
        }
        for r in write_set(&inst.instr) {
            last_writer.insert(r, j);
        }
    }
    rel
}

/// `i <ddep j`: `j` reads a register whose latest write before `j` is `i`.
pub fn data_deps(path: &[InstrInstance]) -> Relation {
    dependencies(path, read_set)
}

/// `i <adep j`: as [`data_deps`], restricted to registers `j` uses for its address.
pub fn addr_deps(path: &[InstrInstance]) -> Relation {
    dependencies(path, addr_read_set)
}

/// Why a pair is in preserved program order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PpoCase {
    SameAddrMemSt = 1,
    SameAddrStLd = 2,
    SameAddrLdLd = 3,
    RegRaw = 4,
    BranchSt = 5,
    AddrSt = 6,
    FenceBefore = 7,
    FenceAfter = 8,
    Transitive = 9,
    /// Every pair of memory instructions under SC.
    ProgramOrder = 10,
}

impl fmt::Display for PpoCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpoCase::ProgramOrder => f.write_str("sc"),
            other => write!(f, "{}", *other as u8),
        }
    }
}

/// Preserved program order of one thread.
#[derive(Debug, Clone)]
pub struct ThreadPpo {
    pub relation: Relation,
    /// First direct case that put each pair in the relation; pairs added only by
    /// closure are absent here.
    pub direct: BTreeMap<(usize, usize), PpoCase>,
}

impl ThreadPpo {
    pub fn case(&self, i: usize, j: usize) -> Option<PpoCase> {
        if !self.relation.contains(i, j) {
            return None;
        }
        Some(self.direct.get(&(i, j)).copied().unwrap_or(PpoCase::Transitive))
    }
}

#[derive(Debug, Clone)]
pub struct PpoRelation {
    pub threads: Vec<ThreadPpo>,
}

impl PpoRelation {
    pub fn contains(&self, a: InstId, b: InstId) -> bool {
        a.thread == b.thread && self.threads[a.thread].relation.contains(a.index, b.index)
    }

    /// All pairs as `(thread, from, to, case)`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, usize, PpoCase)> + '_ {
        self.threads
            .iter()
            .enumerate()
            .flat_map(|(t, ppo)| ppo.relation.pairs().map(move |(i, j)| (t, i, j, ppo.case(i, j).unwrap())))
    }
}

fn fence_of(i: &Instruction) -> Option<(Access, Access)> {
    match i {
        Instruction::Fence(f) => Some((f.from, f.to)),
        _ => None,
    }
}

/// Preserved program order of a single committed path.
pub fn path_ppo(path: &[InstrInstance], cfg: &ModelConfig) -> ThreadPpo {
    let n = path.len();
    let mut relation = Relation::new(n);
    let mut direct = BTreeMap::new();

    if cfg.sc_total_order() {
        for j in 0..n {
            for i in 0..j {
                if path[i].instr.is_memory() && path[j].instr.is_memory() {
                    relation.insert(i, j);
                    direct.insert((i, j), PpoCase::ProgramOrder);
                }
            }
        }
        relation.close();
        return ThreadPpo { relation, direct };
    }

    let ddep = data_deps(path);
    let adep = addr_deps(path);

    // Nearest older same-address store of each load.
    let nearest_store: Vec<Option<usize>> = (0..n)
        .map(|j| {
            if !path[j].instr.is_load() {
                return None;
            }
            (0..j).rev().find(|&k| path[k].instr.is_store() && path[k].same_address(&path[j]))
        })
        .collect();

    let store_between =
        |i: usize, j: usize| (i + 1..j).any(|k| path[k].instr.is_store() && path[k].same_address(&path[j]));

    for j in 0..n {
        let second = &path[j];
        for i in 0..j {
            let first = &path[i];
            let case = if first.instr.is_memory() && second.instr.is_store() && first.same_address(second) {
                Some(PpoCase::SameAddrMemSt)
            } else if nearest_store[j].is_some_and(|s| i < s && ddep.contains(i, s)) {
                Some(PpoCase::SameAddrStLd)
            } else if first.instr.is_load()
                && second.instr.is_load()
                && first.same_address(second)
                && match cfg.same_addr_ld_ld() {
                    SameAddrLoadLoad::Unordered => false,
                    SameAddrLoadLoad::NoInterveningStore => !store_between(i, j),
                    SameAddrLoadLoad::DifferentSource => !store_between(i, j) && first.rf != second.rf,
                }
            {
                Some(PpoCase::SameAddrLdLd)
            } else if ddep.contains(i, j) {
                Some(PpoCase::RegRaw)
            } else if first.instr.is_branch() && second.instr.is_store() {
                Some(PpoCase::BranchSt)
            } else if second.instr.is_store() && (i + 1..j).any(|k| path[k].instr.is_memory() && adep.contains(i, k)) {
                Some(PpoCase::AddrSt)
            } else if fence_of(&first.instr).is_some_and(|(_, to)| second.instr.access() == Some(to)) {
                Some(PpoCase::FenceBefore)
            } else if fence_of(&second.instr).is_some_and(|(from, _)| first.instr.access() == Some(from)) {
                Some(PpoCase::FenceAfter)
            } else {
                None
            };
            if let Some(c) = case {
                relation.insert(i, j);
                direct.insert((i, j), c);
            }
        }
    }
    relation.close();
    ThreadPpo { relation, direct }
}

/// Preserved program order of every committed path of an execution.
pub fn build_ppo(paths: &[Vec<InstrInstance>], cfg: &ModelConfig) -> PpoRelation {
    PpoRelation { threads: paths.iter().map(|p| path_ppo(p, cfg)).collect() }
}
