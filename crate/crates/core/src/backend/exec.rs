//! Reference execution engine: a register machine run row by row along the
//! innermost (contiguous) axis.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use num_traits::Float;
use rayon::prelude::*;
use serde::Serialize;

use super::array::Array;
use super::bindings::Bindings;
use super::code::{to_code, BinOp, Code};
use crate::compiler::flops::body_flops_exact;
use crate::compiler::{Assignment, Direction, LoopKind, Nest, Operator, Section, Target};
use crate::error::{Result, SfError};
use crate::symbolic::{Access, FieldRef, Index};

/// Lanes per row chunk.
const CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precision {
    F64,
    F32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    /// Split the outermost parallel loop across worker threads.
    pub parallel: bool,
    pub precision: Precision,
    /// Check written fields for non-finite values every this many steps (0 disables).
    pub nan_check_interval: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { parallel: true, precision: Precision::F64, nan_check_interval: 100 }
    }
}

impl ExecOptions {
    pub fn serial() -> Self {
        ExecOptions { parallel: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecReport {
    /// Seconds.
    pub wall_time: f64,
    pub steps: usize,
    pub flops: u64,
    pub gflops: f64,
}

#[derive(Debug, Clone, Copy)]
enum TimeIdx {
    None,
    Buffered { off: i64, len: i64 },
    Direct { off: i64, len: i64 },
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    /// Loop index of grid axis plus a constant (offset and halo).
    Loop { axis: usize, add: i64 },
    Fixed(i64),
}

#[derive(Debug, Clone)]
struct Accessor {
    buf: usize,
    time: TimeIdx,
    slot_stride: usize,
    coords: Vec<(Coord, usize)>,
    extents: Vec<usize>,
    name: String,
}

impl Accessor {
    fn new(a: &Access, buf: usize) -> Result<Accessor> {
        let f = &a.field;
        let shape = f.data_shape();
        let tpos = f.time_position();
        let mut strides = vec![1usize; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let halo = f.halo() as i64;
        let mut time = TimeIdx::None;
        let mut slot_stride = 0;
        let mut coords = Vec::new();
        let mut extents = Vec::new();
        for (k, d) in f.dims.iter().enumerate() {
            let idx = a.indices[k];
            if Some(k) == tpos {
                let Index::Rel(off) = idx else {
                    return Err(SfError::Lowering(format!("absolute time index on '{}'", f.name)));
                };
                let len = shape[k] as i64;
                time = if f.is_buffered() { TimeIdx::Buffered { off, len } } else { TimeIdx::Direct { off, len } };
                slot_stride = strides[k];
                continue;
            }
            let c = match (d.axis(), idx) {
                (Some(axis), Index::Rel(o)) => Coord::Loop { axis, add: o + halo },
                (Some(_), Index::Abs(v)) => Coord::Fixed(v + halo),
                (None, Index::Abs(v)) => Coord::Fixed(v),
                (None, Index::Rel(_)) => {
                    return Err(SfError::Lowering(format!("unresolved point index on '{}'", f.name)))
                }
            };
            coords.push((c, strides[k]));
            extents.push(shape[k]);
        }
        Ok(Accessor { buf, time, slot_stride, coords, extents, name: f.name.clone() })
    }

    #[inline]
    fn slot(&self, t: i64) -> usize {
        match self.time {
            TimeIdx::None => 0,
            TimeIdx::Buffered { off, len } => (t + off).rem_euclid(len) as usize,
            TimeIdx::Direct { off, .. } => (t + off) as usize,
        }
    }

    #[inline]
    fn offset(&self, t: i64, idx: &[usize]) -> usize {
        let mut o = self.slot(t) * self.slot_stride;
        for &(c, s) in &self.coords {
            let v = match c {
                Coord::Loop { axis, add } => idx[axis] as i64 + add,
                Coord::Fixed(v) => v,
            };
            o += v as usize * s;
        }
        o
    }

    /// True when consecutive points of `axis` are adjacent in memory.
    fn unit_along(&self, axis: usize) -> bool {
        matches!(self.coords.last(), Some((Coord::Loop { axis: a, .. }, 1)) if *a == axis)
    }

    fn check(&self, bounds: &[(usize, usize)], times: Option<(i64, i64)>) -> Result<()> {
        for (&(c, _), &ext) in self.coords.iter().zip(&self.extents) {
            let (lo, hi) = match c {
                Coord::Loop { axis, add } => {
                    let (a, b) = bounds[axis];
                    if a >= b {
                        continue;
                    }
                    (a as i64 + add, b as i64 - 1 + add)
                }
                Coord::Fixed(v) => (v, v),
            };
            if lo < 0 || hi >= ext as i64 {
                return Err(SfError::Binding(format!(
                    "access to '{}' spans [{lo}, {hi}] outside storage extent {ext}",
                    self.name
                )));
            }
        }
        if let (TimeIdx::Direct { off, len }, Some((t0, t1))) = (self.time, times) {
            if t0 + off < 0 || t1 + off >= len {
                return Err(SfError::Binding(format!(
                    "time range [{t0}, {t1}] with offset {off} exceeds {len} stored steps of '{}'",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Src<T> {
    Reg(usize),
    Acc(usize),
    Const(T),
}

#[derive(Debug, Clone)]
enum Instr<T> {
    Bin { op: BinOp, dst: usize, a: Src<T>, b: Src<T> },
    Neg { dst: usize, a: Src<T> },
    Copy { dst: usize, a: Src<T> },
    Store { acc: usize, src: Src<T>, accumulate: bool },
}

#[derive(Debug, Clone)]
struct Kernel<T> {
    accs: Vec<Accessor>,
    instrs: Vec<Instr<T>>,
    nregs: usize,
}

struct Builder<'a, T> {
    accs: Vec<Accessor>,
    acc_ids: HashMap<Access, usize>,
    instrs: Vec<Instr<T>>,
    free: Vec<usize>,
    nregs: usize,
    pinned: BTreeSet<usize>,
    temps: HashMap<String, usize>,
    scalars: &'a HashMap<String, f64>,
    bufs: &'a HashMap<String, usize>,
}

impl<'a, T: Float> Builder<'a, T> {
    fn new(scalars: &'a HashMap<String, f64>, bufs: &'a HashMap<String, usize>) -> Self {
        Builder {
            accs: vec![],
            acc_ids: HashMap::new(),
            instrs: vec![],
            free: vec![],
            nregs: 0,
            pinned: BTreeSet::new(),
            temps: HashMap::new(),
            scalars,
            bufs,
        }
    }

    fn alloc(&mut self) -> usize {
        self.free.pop().unwrap_or_else(|| {
            self.nregs += 1;
            self.nregs - 1
        })
    }

    fn release(&mut self, s: Src<T>) {
        if let Src::Reg(r) = s {
            if !self.pinned.contains(&r) {
                self.free.push(r);
            }
        }
    }

    fn access(&mut self, a: &Access) -> Result<usize> {
        if let Some(&i) = self.acc_ids.get(a) {
            return Ok(i);
        }
        let buf = *self
            .bufs
            .get(&a.field.name)
            .ok_or_else(|| SfError::Binding(format!("no buffer bound for '{}'", a.field.name)))?;
        self.accs.push(Accessor::new(a, buf)?);
        self.acc_ids.insert(a.clone(), self.accs.len() - 1);
        Ok(self.accs.len() - 1)
    }

    fn gen(&mut self, c: &Code) -> Result<Src<T>> {
        Ok(match c {
            Code::Const(v) => Src::Const(T::from(*v).unwrap()),
            Code::Sym(s) => match self.temps.get(s) {
                Some(&r) => Src::Reg(r),
                None => match self.scalars.get(s) {
                    Some(&v) => Src::Const(T::from(v).unwrap()),
                    None => return Err(SfError::Binding(format!("unbound scalar '{s}'"))),
                },
            },
            Code::Load(a) => Src::Acc(self.access(a)?),
            Code::Neg(a) => {
                let a = self.gen(a)?;
                let dst = self.alloc();
                self.release(a);
                self.instrs.push(Instr::Neg { dst, a });
                Src::Reg(dst)
            }
            Code::Bin(op, a, b) => {
                let a = self.gen(a)?;
                let b = self.gen(b)?;
                let dst = self.alloc();
                self.release(a);
                self.release(b);
                self.instrs.push(Instr::Bin { op: *op, dst, a, b });
                Src::Reg(dst)
            }
            Code::Pow(b, p) => {
                let base = self.gen(b)?;
                let mut acc = base;
                for _ in 1..p.unsigned_abs() {
                    let dst = self.alloc();
                    if !matches!((acc, base), (Src::Reg(x), Src::Reg(y)) if x == y) {
                        self.release(acc);
                    }
                    self.instrs.push(Instr::Bin { op: BinOp::Mul, dst, a: acc, b: base });
                    acc = Src::Reg(dst);
                }
                if *p < 0 {
                    let dst = self.alloc();
                    self.instrs.push(Instr::Bin { op: BinOp::Div, dst, a: Src::Const(T::one()), b: acc });
                    if !matches!((acc, base), (Src::Reg(x), Src::Reg(y)) if x == y) {
                        self.release(acc);
                    }
                    acc = Src::Reg(dst);
                }
                if !matches!((acc, base), (Src::Reg(x), Src::Reg(y)) if x == y) {
                    self.release(base);
                }
                acc
            }
        })
    }

    fn assignment(&mut self, a: &Assignment) -> Result<()> {
        let src = self.gen(&to_code(&a.value)?)?;
        match &a.target {
            Target::Field(acc) => {
                let id = self.access(acc)?;
                self.instrs.push(Instr::Store { acc: id, src, accumulate: a.accumulate });
                self.release(src);
            }
            Target::Temp(n) => {
                let r = match src {
                    Src::Reg(r) if !self.pinned.contains(&r) => r,
                    _ => {
                        let dst = self.alloc();
                        self.instrs.push(Instr::Copy { dst, a: src });
                        dst
                    }
                };
                self.pinned.insert(r);
                self.temps.insert(n.clone(), r);
            }
        }
        Ok(())
    }

    fn finish(self) -> Kernel<T> {
        Kernel { accs: self.accs, instrs: self.instrs, nregs: self.nregs.max(1) }
    }
}

fn compile_body<T: Float>(
    body: &[Assignment],
    scalars: &HashMap<String, f64>,
    bufs: &HashMap<String, usize>,
) -> Result<Kernel<T>> {
    let mut b = Builder::new(scalars, bufs);
    for a in body {
        b.assignment(a)?;
    }
    Ok(b.finish())
}

#[derive(Clone, Copy)]
struct Ptr<T>(*mut T);
// SAFETY: workers write disjoint points of the outermost parallel loop; the
// lowering rejects same-slot reads at space offsets of written fields.
unsafe impl<T> Send for Ptr<T> {}
unsafe impl<T> Sync for Ptr<T> {}

enum Opnd<'a, T> {
    S(&'a [T]),
    C(T),
}

#[inline(always)]
fn binop<T: Float>(d: &mut [T], a: Opnd<T>, b: Opnd<T>, f: impl Fn(T, T) -> T) {
    match (a, b) {
        (Opnd::S(x), Opnd::S(y)) => {
            for ((d, &x), &y) in d.iter_mut().zip(x).zip(y) {
                *d = f(x, y);
            }
        }
        (Opnd::S(x), Opnd::C(y)) => {
            for (d, &x) in d.iter_mut().zip(x) {
                *d = f(x, y);
            }
        }
        (Opnd::C(x), Opnd::S(y)) => {
            for (d, &y) in d.iter_mut().zip(y) {
                *d = f(x, y);
            }
        }
        (Opnd::C(x), Opnd::C(y)) => d.fill(f(x, y)),
    }
}

impl<T: Float + Send + Sync> Kernel<T> {
    /// Run the kernel for `len` consecutive points starting at `idx` along `inner`.
    ///
    /// # Safety
    /// Accessor offsets must have been bounds-checked for these points and `ptrs`
    /// must be valid; concurrent callers must write disjoint points.
    unsafe fn run_row(
        &self,
        ptrs: &[Ptr<T>],
        t: i64,
        idx: &[usize],
        inner: Option<usize>,
        len: usize,
        regs: &mut [T],
        bases: &mut Vec<(*mut T, bool)>,
    ) {
        bases.clear();
        for a in &self.accs {
            let p = ptrs[a.buf].0.add(a.offset(t, idx));
            bases.push((p, inner.is_some_and(|ax| a.unit_along(ax))));
        }
        let rp = regs.as_mut_ptr();
        let reg = |r: usize| std::slice::from_raw_parts(rp.add(r * CHUNK), len);
        let opnd = |s: &Src<T>| -> Opnd<T> {
            match *s {
                Src::Reg(r) => Opnd::S(reg(r)),
                Src::Const(c) => Opnd::C(c),
                Src::Acc(i) => {
                    let (p, unit) = bases[i];
                    if unit {
                        Opnd::S(std::slice::from_raw_parts(p, len))
                    } else {
                        Opnd::C(*p)
                    }
                }
            }
        };
        for ins in &self.instrs {
            match ins {
                Instr::Bin { op, dst, a, b } => {
                    let d = std::slice::from_raw_parts_mut(rp.add(dst * CHUNK), len);
                    let (a, b) = (opnd(a), opnd(b));
                    match op {
                        BinOp::Add => binop(d, a, b, |x, y| x + y),
                        BinOp::Sub => binop(d, a, b, |x, y| x - y),
                        BinOp::Mul => binop(d, a, b, |x, y| x * y),
                        BinOp::Div => binop(d, a, b, |x, y| x / y),
                    }
                }
                Instr::Neg { dst, a } => {
                    let d = std::slice::from_raw_parts_mut(rp.add(dst * CHUNK), len);
                    binop(d, opnd(a), Opnd::C(T::zero()), |x, _| -x);
                }
                Instr::Copy { dst, a } => {
                    let d = std::slice::from_raw_parts_mut(rp.add(dst * CHUNK), len);
                    binop(d, opnd(a), Opnd::C(T::zero()), |x, _| x);
                }
                Instr::Store { acc, src, accumulate } => {
                    let (p, unit) = bases[*acc];
                    let v = opnd(src);
                    let get = |k: usize| match &v {
                        Opnd::S(s) => s[k],
                        Opnd::C(c) => *c,
                    };
                    for k in 0..len {
                        let q = if unit { p.add(k) } else { p };
                        *q = if *accumulate { *q + get(k) } else { get(k) };
                    }
                }
            }
        }
    }

    fn check(&self, bounds: &[(usize, usize)], times: Option<(i64, i64)>) -> Result<()> {
        self.accs.iter().try_for_each(|a| a.check(bounds, times))
    }
}

struct Scratch<T> {
    regs: Vec<T>,
    bases: Vec<(*mut T, bool)>,
    idx: Vec<usize>,
    origin: Vec<usize>,
}

impl<T: Float> Scratch<T> {
    fn new(nregs: usize, nd: usize) -> Self {
        Scratch { regs: vec![T::zero(); nregs * CHUNK], bases: vec![], idx: vec![0; nd], origin: vec![0; nd] }
    }
}

fn loop_values(nest: &Nest, level: usize, origin: &[usize]) -> Vec<usize> {
    let l = &nest.loops[level];
    match l.kind {
        LoopKind::Range => (l.lo..l.hi).collect(),
        LoopKind::BlockOuter { tile } => (l.lo..l.hi).step_by(tile).collect(),
        LoopKind::BlockInner { tile } => (origin[l.axis]..(origin[l.axis] + tile).min(l.hi)).collect(),
    }
}

fn set_level(nest: &Nest, level: usize, v: usize, s: &mut Scratch<impl Float>) {
    let l = &nest.loops[level];
    match l.kind {
        LoopKind::BlockOuter { .. } => s.origin[l.axis] = v,
        _ => s.idx[l.axis] = v,
    }
}

/// # Safety
/// See [`Kernel::run_row`].
unsafe fn walk<T: Float + Send + Sync>(
    k: &Kernel<T>,
    nest: &Nest,
    ptrs: &[Ptr<T>],
    t: i64,
    level: usize,
    s: &mut Scratch<T>,
) {
    let last = nest.loops.len() - 1;
    if level == last {
        let l = &nest.loops[last];
        let (lo, hi) = match l.kind {
            LoopKind::BlockInner { tile } => (s.origin[l.axis], (s.origin[l.axis] + tile).min(l.hi)),
            _ => (l.lo, l.hi),
        };
        let mut c = lo;
        while c < hi {
            let len = CHUNK.min(hi - c);
            s.idx[l.axis] = c;
            k.run_row(ptrs, t, &s.idx, Some(l.axis), len, &mut s.regs, &mut s.bases);
            c += len;
        }
        return;
    }
    for v in loop_values(nest, level, &s.origin) {
        set_level(nest, level, v, s);
        walk(k, nest, ptrs, t, level + 1, s);
    }
}

fn run_nest<T: Float + Send + Sync>(k: &Kernel<T>, nest: &Nest, ptrs: &[Ptr<T>], t: i64, parallel: bool) {
    if nest.points() == 0 {
        return;
    }
    let nd = nest.bounds.len();
    if parallel && nest.loops.len() > 1 && nest.loops[0].parallel {
        let vals = loop_values(nest, 0, &vec![0; nd]);
        vals.par_iter().for_each_init(
            || Scratch::new(k.nregs, nd),
            |s, &v| {
                set_level(nest, 0, v, s);
                // SAFETY: bounds were checked before the time loop; iterations of
                // the outermost loop write disjoint points.
                unsafe { walk(k, nest, ptrs, t, 1, s) }
            },
        );
    } else {
        let mut s = Scratch::new(k.nregs, nd);
        // SAFETY: bounds were checked before the time loop.
        unsafe { walk(k, nest, ptrs, t, 0, &mut s) }
    }
}

fn run_points<T: Float + Send + Sync>(k: &Kernel<T>, ptrs: &[Ptr<T>], t: i64) {
    let mut s = Scratch::new(k.nregs, 0);
    // SAFETY: every index is fixed and was bounds-checked.
    unsafe { k.run_row(ptrs, t, &[], None, 1, &mut s.regs, &mut s.bases) }
}

enum Compiled<T> {
    Nest(Kernel<T>, Nest),
    Points(Kernel<T>),
}

/// Evaluate hoisted scalars in order on top of the bound scalars.
pub(crate) fn scalar_env(op: &Operator, b: &Bindings) -> Result<HashMap<String, f64>> {
    let mut env: HashMap<String, f64> = b.scalars().iter().map(|(k, v)| (k.clone(), *v)).collect();
    for p in &op.parameters {
        if !env.contains_key(p) {
            return Err(SfError::Binding(format!("unbound scalar '{p}'")));
        }
    }
    for (n, e) in &op.ir.scalars {
        let v = to_code(e)?.eval(&|s| env.get(s).copied())?;
        env.insert(n.clone(), v);
    }
    Ok(env)
}

fn check_shapes(op: &Operator, b: &Bindings) -> Result<()> {
    for f in &op.fields {
        let a = b.array(&f.name)?;
        if a.shape() != f.data_shape().as_slice() {
            return Err(SfError::Binding(format!(
                "buffer for '{}' has shape {:?}, expected {:?}",
                f.name,
                a.shape(),
                f.data_shape()
            )));
        }
    }
    Ok(())
}

fn written_fields(op: &Operator) -> BTreeSet<String> {
    op.ir
        .assignments()
        .iter()
        .filter_map(|a| match &a.target {
            Target::Field(acc) => Some(acc.field.name.clone()),
            _ => None,
        })
        .collect()
}

fn run_generic<T: Float + Send + Sync>(
    op: &Operator,
    env: &HashMap<String, f64>,
    order: &[FieldRef],
    ptrs: &[Ptr<T>],
    lens: &[usize],
    times: Option<(i64, i64)>,
    opts: &ExecOptions,
) -> Result<usize> {
    let bufs: HashMap<String, usize> = order.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
    let prologue: Vec<(Kernel<T>, &Nest)> = op
        .ir
        .prologue
        .iter()
        .map(|n| Ok((compile_body::<T>(&n.body, env, &bufs)?, n)))
        .collect::<Result<_>>()?;
    let body: Vec<Compiled<T>> = op
        .ir
        .body
        .iter()
        .map(|s| {
            Ok(match s {
                Section::Nest(n) => Compiled::Nest(compile_body(&n.body, env, &bufs)?, n.clone()),
                Section::Points(p) => Compiled::Points(compile_body(&p.body, env, &bufs)?),
            })
        })
        .collect::<Result<_>>()?;
    for (k, n) in &prologue {
        k.check(&n.bounds, None)?;
    }
    for c in &body {
        match c {
            Compiled::Nest(k, n) => k.check(&n.bounds, times)?,
            Compiled::Points(k) => k.check(&[], times)?,
        }
    }
    for (k, n) in &prologue {
        run_nest(k, n, ptrs, 0, opts.parallel);
    }
    let written: Vec<usize> = written_fields(op).iter().filter_map(|n| bufs.get(n).copied()).collect();
    let check_finite = |t: i64| -> Result<()> {
        for &i in &written {
            // SAFETY: the pointer is valid for `lens[i]` elements and no kernel is running.
            let s = unsafe { std::slice::from_raw_parts(ptrs[i].0, lens[i]) };
            if s.iter().any(|v| !v.is_finite()) {
                return Err(SfError::Instability(format!("non-finite value in '{}' at time step {t}", order[i].name)));
            }
        }
        Ok(())
    };
    let steps: Vec<i64> = match (times, &op.ir.time) {
        (Some((m, mx)), Some(tl)) => match tl.direction {
            Direction::Forward => (m..=mx).collect(),
            Direction::Backward => (m..=mx).rev().collect(),
        },
        _ => vec![0],
    };
    for (n, &t) in steps.iter().enumerate() {
        for c in &body {
            match c {
                Compiled::Nest(k, nest) => run_nest(k, nest, ptrs, t, opts.parallel),
                Compiled::Points(k) => run_points(k, ptrs, t),
            }
        }
        if opts.nan_check_interval > 0 && ((n + 1) % opts.nan_check_interval == 0 || n + 1 == steps.len()) {
            check_finite(t)?;
        }
    }
    Ok(steps.len())
}

/// Execute with default options.
pub fn execute(op: &Operator, b: &mut Bindings) -> Result<ExecReport> {
    execute_with(op, b, &ExecOptions::default())
}

pub fn execute_with(op: &Operator, b: &mut Bindings, opts: &ExecOptions) -> Result<ExecReport> {
    check_shapes(op, b)?;
    let env = scalar_env(op, b)?;
    let times = b.resolve_time(op)?;
    let mut order: Vec<FieldRef> = op.fields.clone();
    order.extend(op.ir.temporaries.iter().cloned());
    let mut temps: Vec<Array> = op.ir.temporaries.iter().map(|f| Array::zeros(&f.data_shape())).collect();
    let start = Instant::now();
    let steps = match opts.precision {
        Precision::F64 => {
            let arrays = b.arrays_mut();
            let mut ptrs = Vec::new();
            let mut lens = Vec::new();
            for f in &op.fields {
                let a = arrays.get_mut(&f.name).unwrap();
                lens.push(a.len());
                ptrs.push(Ptr(a.as_mut_slice().as_mut_ptr()));
            }
            for a in temps.iter_mut() {
                lens.push(a.len());
                ptrs.push(Ptr(a.as_mut_slice().as_mut_ptr()));
            }
            run_generic::<f64>(op, &env, &order, &ptrs, &lens, times, opts)?
        }
        Precision::F32 => {
            let mut data: Vec<Vec<f32>> = Vec::new();
            for f in &op.fields {
                data.push(b.array(&f.name)?.as_slice().iter().map(|&v| v as f32).collect());
            }
            for a in &temps {
                data.push(vec![0.0; a.len()]);
            }
            let lens: Vec<usize> = data.iter().map(|d| d.len()).collect();
            let ptrs: Vec<Ptr<f32>> = data.iter_mut().map(|d| Ptr(d.as_mut_ptr())).collect();
            let r = run_generic::<f32>(op, &env, &order, &ptrs, &lens, times, opts);
            for (f, d) in op.fields.iter().zip(&data) {
                for (o, &v) in b.array_mut(&f.name)?.as_mut_slice().iter_mut().zip(d) {
                    *o = v as f64;
                }
            }
            r?
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let flops = (body_flops_exact(&op.ir) * steps) as u64;
    Ok(ExecReport { wall_time: wall, steps, flops, gflops: if wall > 0.0 { flops as f64 / wall / 1e9 } else { 0.0 } })
}

impl Operator {
    /// Execute on `b` with default options.
    pub fn apply(&self, b: &mut Bindings) -> Result<ExecReport> {
        execute(self, b)
    }

    /// Zeroed buffers for every field of the operator, plus grid spacings.
    pub fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        for f in &self.fields {
            b.alloc(f);
            b.bind_grid(&f.grid);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::CompileOptions;
    use crate::grid::Grid;
    use crate::symbolic::{Equation, Expr};

    #[test]
    fn copy_kernel_1d() {
        let g = Grid::new(&[10], &[1.0]).unwrap();
        let a = FieldRef::dense("a", &g, 2).unwrap();
        let c = FieldRef::dense("c", &g, 2).unwrap();
        let op = Operator::new(&[Equation::new(c.center(), a.center() * Expr::sym("k"))]).unwrap();
        let mut b = op.bindings();
        let vals = Array::from_vec(&[10], (0..10).map(|i| i as f64).collect()).unwrap();
        b.set_interior(&a, None, &vals).unwrap();
        assert!(matches!(op.apply(&mut b), Err(SfError::Binding(_))));
        b.set_scalar("k", 2.0);
        let r = op.apply(&mut b).unwrap();
        assert_eq!(r.steps, 1);
        assert_eq!(r.flops, 10);
        let out = b.interior(&c, None).unwrap();
        assert_eq!(out.to_vec(), (0..10).map(|i| 2.0 * i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn impulse_one_step() {
        let g = Grid::new(&[7, 7], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        let eq = Equation::new(u.forward(), 2 * u.center() - u.backward() + u.laplace());
        let op = Operator::new(&[eq]).unwrap();
        let mut b = op.bindings();
        let mut init = Array::zeros(&[7, 7]);
        init.set(&[3, 3], 1.0);
        b.set_interior(&u, Some(1), &init).unwrap();
        b.set_time_range(1, 1);
        op.apply(&mut b).unwrap();
        let next = b.interior(&u, Some(2)).unwrap();
        assert_eq!(next.get(&[3, 3]), 2.0 - 4.0);
        assert_eq!(next.get(&[2, 3]), 1.0);
        assert_eq!(next.get(&[2, 2]), 0.0);
    }

    #[test]
    fn serial_parallel_blocked_and_f32_agree() {
        let g = Grid::new(&[33, 29], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 4, 2, None).unwrap();
        let eq = Equation::new(u.forward(), 2 * u.center() - u.backward() + 0.1 * u.laplace());
        let op = Operator::new(std::slice::from_ref(&eq)).unwrap();
        let blocked = Operator::with_options(&[eq], CompileOptions { tiles: Some(vec![8, 8]), ..Default::default() }).unwrap();
        let init = |op: &Operator| {
            let mut b = op.bindings();
            let mut a = Array::zeros(&[33, 29]);
            a.set(&[16, 14], 1.0);
            b.set_interior(&u, Some(0), &a).unwrap();
            b.set_interior(&u, Some(1), &a).unwrap();
            b.set_nt(20);
            b
        };
        let mut b1 = init(&op);
        execute_with(&op, &mut b1, &ExecOptions::serial()).unwrap();
        let mut b2 = init(&op);
        execute_with(&op, &mut b2, &ExecOptions::default()).unwrap();
        let mut b3 = init(&blocked);
        execute_with(&blocked, &mut b3, &ExecOptions::serial()).unwrap();
        assert_eq!(b1.array("u").unwrap(), b2.array("u").unwrap());
        assert_eq!(b1.array("u").unwrap(), b3.array("u").unwrap());
        let mut b4 = init(&op);
        execute_with(&op, &mut b4, &ExecOptions { precision: Precision::F32, ..ExecOptions::serial() }).unwrap();
        let (x, y) = (b1.array("u").unwrap(), b4.array("u").unwrap());
        let err = x.as_slice().iter().zip(y.as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-5 * x.max_abs(), "{err}");
    }

    #[test]
    fn blowup_is_reported() {
        let g = Grid::new(&[9], &[1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 1, None).unwrap();
        let op = Operator::new(&[Equation::new(u.forward(), 1e200 * u.center())]).unwrap();
        let mut b = op.bindings();
        b.array_mut("u").unwrap().fill(1.0);
        b.set_time_range(0, 10);
        let r = execute_with(&op, &mut b, &ExecOptions { nan_check_interval: 1, ..Default::default() });
        assert!(matches!(r, Err(SfError::Instability(_))));
    }
}
