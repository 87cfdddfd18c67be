//! Optimization passes: CSE, weight factorization, invariant hoisting, blocking.
//!
//! CSE, hoisting and blocking never reorder arithmetic, so serial results are
//! bitwise identical with and without them. Factorization reassociates sums.

use std::collections::{BTreeSet, HashMap};

use super::flops::expr_flops;
use super::ir::{Assignment, Iteration, LoopKind, LoopNestIR, Nest, Section, Target};
use crate::error::{Result, SfError};
use crate::symbolic::expr::{make_add, make_mul, split_coeff, Expr, Node, Num};
use crate::symbolic::FieldRef;

/// Name generator shared by all passes of one compilation.
#[derive(Debug, Default, Clone)]
pub struct Names {
    temps: usize,
    scalars: usize,
    arrays: usize,
}

impl Names {
    fn temp(&mut self) -> String {
        self.temps += 1;
        format!("r{}", self.temps - 1)
    }
    fn scalar(&mut self) -> String {
        self.scalars += 1;
        format!("s{}", self.scalars - 1)
    }
    fn array(&mut self) -> String {
        self.arrays += 1;
        format!("ti{}", self.arrays - 1)
    }
}

fn count_subtrees(e: &Expr, counts: &mut HashMap<Expr, usize>) {
    if e.is_leaf() {
        return;
    }
    *counts.entry(e.clone()).or_insert(0) += 1;
    for c in e.children() {
        count_subtrees(&c, counts);
    }
}

/// Bind every repeated non-leaf subtree of a loop body to a temporary.
pub fn cse(body: &[Assignment], names: &mut Names) -> Vec<Assignment> {
    let mut values: Vec<Expr> = body.iter().map(|a| a.value.clone()).collect();
    let mut temps: Vec<(String, Expr)> = Vec::new();
    loop {
        let mut counts = HashMap::new();
        for e in values.iter().chain(temps.iter().map(|(_, e)| e)) {
            count_subtrees(e, &mut counts);
        }
        let best = counts
            .into_iter()
            .filter(|(e, n)| *n >= 2 && expr_flops(e).total() > 0)
            .map(|(e, _)| e)
            .max_by(|a, b| a.node_count().cmp(&b.node_count()).then_with(|| b.cmp(a)));
        let Some(best) = best else { break };
        let name = names.temp();
        let map: HashMap<Expr, Expr> = [(best.clone(), Expr::sym(&name))].into_iter().collect();
        values = values.iter().map(|e| e.replace_raw(&map)).collect();
        for t in temps.iter_mut() {
            t.1 = t.1.replace_raw(&map);
        }
        temps.push((name, best));
    }
    if temps.is_empty() {
        return body.to_vec();
    }
    let defs: HashMap<String, Expr> = temps.iter().cloned().collect();
    let mut emitted = BTreeSet::new();
    let mut out = Vec::new();
    fn emit(n: &str, defs: &HashMap<String, Expr>, emitted: &mut BTreeSet<String>, out: &mut Vec<Assignment>) {
        if emitted.contains(n) {
            return;
        }
        let def = &defs[n];
        for dep in def.symbols() {
            if defs.contains_key(&dep) {
                emit(&dep, defs, emitted, out);
            }
        }
        emitted.insert(n.to_string());
        out.push(Assignment { target: Target::Temp(n.to_string()), value: def.clone(), accumulate: false });
    }
    for (a, v) in body.iter().zip(values) {
        for s in v.symbols() {
            if defs.contains_key(&s) {
                emit(&s, &defs, &mut emitted, &mut out);
            }
        }
        out.push(Assignment { target: a.target.clone(), value: v, accumulate: a.accumulate });
    }
    out
}

fn factors_of(rest: &Expr) -> Vec<Expr> {
    if rest.is_one() {
        return vec![];
    }
    match rest.node() {
        Node::Mul(ch) => ch.clone(),
        _ => vec![rest.clone()],
    }
}

fn abs_num(n: &Num) -> (Num, bool) {
    let neg = match n {
        Num::Rat(r) => num_traits::Signed::is_negative(r),
        Num::F(x) => *x < 0.0,
    };
    (if neg { n.neg() } else { n.clone() }, neg)
}

fn factor_sum(terms: Vec<Expr>) -> Expr {
    let split: Vec<(Num, Vec<Expr>)> = terms
        .iter()
        .map(|t| {
            let (c, rest) = split_coeff(t);
            (c, factors_of(&rest))
        })
        .collect();
    let mut counts: HashMap<&Expr, usize> = HashMap::new();
    for (_, fs) in &split {
        let uniq: BTreeSet<&Expr> = fs.iter().collect();
        for f in uniq {
            *counts.entry(f).or_insert(0) += 1;
        }
    }
    let best = counts
        .iter()
        .filter(|(_, &n)| n >= 2)
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(f, _)| (*f).clone());
    if let Some(f) = best {
        let (with, without): (Vec<usize>, Vec<usize>) = (0..split.len()).partition(|&i| split[i].1.contains(&f));
        let mut common: Vec<Expr> = split[with[0]].1.clone();
        for &i in &with[1..] {
            common.retain(|c| split[i].1.contains(c));
        }
        let inner: Vec<Expr> = with
            .iter()
            .map(|&i| {
                let (c, fs) = &split[i];
                let mut rem = fs.clone();
                for cf in &common {
                    if let Some(p) = rem.iter().position(|x| x == cf) {
                        rem.remove(p);
                    }
                }
                let mut v = vec![c.clone().into_expr()];
                v.extend(rem);
                make_mul(v)
            })
            .collect();
        let mut g = common;
        g.push(factor_sum(inner));
        let grouped = make_mul(g);
        if without.is_empty() {
            return grouped;
        }
        let others = factor_sum(without.iter().map(|&i| terms[i].clone()).collect());
        return make_add(vec![grouped, others]);
    }
    // No shared symbolic factor: group terms with equal coefficient magnitude.
    let mut groups: Vec<(Num, Vec<Expr>)> = Vec::new();
    let mut singles = Vec::new();
    for (t, (c, fs)) in terms.iter().zip(&split) {
        let (mag, neg) = abs_num(c);
        if mag.is_one() || fs.is_empty() {
            singles.push(t.clone());
            continue;
        }
        let rest = make_mul(fs.clone());
        let signed = if neg { -rest } else { rest };
        match groups.iter_mut().find(|(m, _)| *m == mag) {
            Some(g) => g.1.push(signed),
            None => groups.push((mag, vec![signed])),
        }
    }
    let mut out = singles;
    for (mag, rs) in groups {
        out.push(make_mul(vec![mag.into_expr(), make_add(rs)]));
    }
    make_add(out)
}

/// Group shared factors and equal finite-difference weights in every sum.
pub fn factorize(e: &Expr) -> Expr {
    match e.node() {
        Node::Add(ch) => factor_sum(ch.iter().map(factorize).collect()),
        Node::Mul(_) | Node::Pow(..) => e.map_children(factorize),
        _ => e.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Scalar,
    Invariant,
    Varying,
}

fn classify(e: &Expr, env: &HashMap<String, Class>) -> Class {
    match e.node() {
        Node::Rat(_) | Node::Float(_) => Class::Scalar,
        Node::Sym(s) => env.get(&**s).copied().unwrap_or(Class::Scalar),
        Node::Access(a) => {
            if a.field.is_time_dependent() {
                Class::Varying
            } else {
                Class::Invariant
            }
        }
        _ => e.children().iter().map(|c| classify(c, env)).max().unwrap_or(Class::Scalar),
    }
}

fn rebuild_raw(e: &Expr, children: Vec<Expr>) -> Expr {
    match e.node() {
        Node::Add(_) => Expr::raw(Node::Add(children)),
        Node::Mul(_) => Expr::raw(Node::Mul(children)),
        Node::Pow(_, p) => Expr::raw(Node::Pow(children.into_iter().next().unwrap(), *p)),
        _ => e.clone(),
    }
}

/// Replace maximal subtrees (and maximal leading runs of sum/product operands)
/// whose class is at most `level` with the result of `make`.
fn extract(
    e: &Expr,
    env: &HashMap<String, Class>,
    level: Class,
    make: &mut dyn FnMut(&Expr) -> Expr,
) -> Expr {
    if e.is_leaf() {
        return e.clone();
    }
    let cls = classify(e, env);
    if cls <= level && (level == Class::Scalar || cls == Class::Invariant) {
        return make(e);
    }
    match e.node() {
        Node::Add(ch) | Node::Mul(ch) => {
            let run = ch.iter().take_while(|c| classify(c, env) <= level).count();
            let has_level = ch[..run].iter().any(|c| classify(c, env) == level);
            let mut out = Vec::with_capacity(ch.len());
            let mut start = 0;
            if run >= 2 && has_level {
                out.push(make(&rebuild_raw(e, ch[..run].to_vec())));
                start = run;
            }
            out.extend(ch[start..].iter().map(|c| extract(c, env, level, make)));
            rebuild_raw(e, out)
        }
        Node::Pow(b, _) => rebuild_raw(e, vec![extract(b, env, level, make)]),
        _ => e.clone(),
    }
}

fn inline_temps(e: &Expr, defs: &HashMap<String, Expr>) -> Expr {
    match e.node() {
        Node::Sym(s) => match defs.get(&**s) {
            Some(d) => inline_temps(d, defs),
            None => e.clone(),
        },
        Node::Add(_) | Node::Mul(_) | Node::Pow(..) => {
            rebuild_raw(e, e.children().iter().map(|c| inline_temps(c, defs)).collect())
        }
        _ => e.clone(),
    }
}

/// Run `extract` over each assignment of a body, with loop-local temporaries
/// classified from their definitions and inlined into anything moved out.
fn hoist_body(body: &mut [Assignment], level: Class, make: &mut dyn FnMut(&Expr) -> Expr) {
    let mut env = HashMap::new();
    let mut defs = HashMap::new();
    for a in body.iter_mut() {
        let v = extract(&a.value, &env, level, &mut |e| make(&inline_temps(e, &defs)));
        a.value = v;
        if let Target::Temp(n) = &a.target {
            env.insert(n.clone(), classify(&a.value, &env));
            defs.insert(n.clone(), a.value.clone());
        }
    }
}

/// Forward temporaries bound to a single leaf, then drop unread temporaries.
fn remove_dead_temps(body: &mut Vec<Assignment>) {
    let mut copies: HashMap<Expr, Expr> = HashMap::new();
    for a in body.iter_mut() {
        if !copies.is_empty() {
            a.value = a.value.replace_raw(&copies);
        }
        if let Target::Temp(n) = &a.target {
            if a.value.is_leaf() {
                copies.insert(Expr::sym(n), a.value.clone());
            }
        }
    }
    loop {
        let used: BTreeSet<String> = body.iter().flat_map(|a| a.value.symbols()).collect();
        let before = body.len();
        body.retain(|a| !matches!(&a.target, Target::Temp(n) if !used.contains(n)));
        if body.len() == before {
            break;
        }
    }
}

/// Loop-invariant code motion: scalar subexpressions to the top scope and,
/// inside a time loop, time-invariant subexpressions to precomputed arrays.
pub fn hoist(ir: &mut LoopNestIR, names: &mut Names) {
    let mut scalar_map: HashMap<Expr, String> = ir.scalars.iter().map(|(n, e)| (e.clone(), n.clone())).collect();
    let mut new_scalars = Vec::new();
    {
        let mut mk = |e: &Expr| -> Expr {
            let n = scalar_map.entry(e.clone()).or_insert_with(|| {
                let n = names.scalar();
                new_scalars.push((n.clone(), e.clone()));
                n
            });
            Expr::sym(n)
        };
        for n in ir.prologue.iter_mut() {
            hoist_body(&mut n.body, Class::Scalar, &mut mk);
        }
        for s in ir.body.iter_mut() {
            match s {
                Section::Nest(n) => hoist_body(&mut n.body, Class::Scalar, &mut mk),
                Section::Points(p) => hoist_body(&mut p.body, Class::Scalar, &mut mk),
            }
        }
    }
    ir.scalars.extend(new_scalars);

    if ir.time.is_some() {
        let mut arrays: HashMap<(Expr, Vec<(usize, usize)>), FieldRef> = HashMap::new();
        let mut prologue = Vec::new();
        let mut temporaries = Vec::new();
        for s in ir.body.iter_mut() {
            let Section::Nest(n) = s else { continue };
            let grid = n.grid.clone();
            let bounds = n.bounds.clone();
            hoist_body(&mut n.body, Class::Invariant, &mut |e| {
                let key = (e.clone(), bounds.clone());
                let f = arrays.entry(key).or_insert_with(|| {
                    let f = FieldRef::dense_unchecked(&names.array(), &grid, 0);
                    let asg = Assignment { target: Target::Field(access_of(&f)), value: e.clone(), accumulate: false };
                    prologue.push(Nest::new(grid.clone(), bounds.clone(), vec![asg]));
                    temporaries.push(f.clone());
                    f
                });
                f.center()
            });
        }
        ir.prologue.extend(prologue);
        ir.temporaries.extend(temporaries);
    }
    for s in ir.body.iter_mut() {
        match s {
            Section::Nest(n) => remove_dead_temps(&mut n.body),
            Section::Points(p) => remove_dead_temps(&mut p.body),
        }
    }
}

fn access_of(f: &FieldRef) -> crate::symbolic::Access {
    f.center().as_access().unwrap().clone()
}

/// Split the leading space loops of every body nest into tile/intra-tile pairs.
pub fn block_loops(ir: &mut LoopNestIR, tiles: &[usize]) -> Result<()> {
    if tiles.is_empty() || tiles.iter().any(|&t| t < 1) {
        return Err(SfError::Parameter(format!("tile sizes must be >= 1, got {tiles:?}")));
    }
    for n in ir.nests_mut() {
        if tiles.len() > n.bounds.len() {
            return Err(SfError::Parameter(format!(
                "{} tile sizes for a {}-D nest",
                tiles.len(),
                n.bounds.len()
            )));
        }
        let base = Nest::new(n.grid.clone(), n.bounds.clone(), vec![]).loops;
        let mut loops: Vec<Iteration> = Vec::new();
        for (ax, &t) in tiles.iter().enumerate() {
            loops.push(Iteration { kind: LoopKind::BlockOuter { tile: t }, vectorizable: false, ..base[ax].clone() });
        }
        for (ax, l) in base.into_iter().enumerate() {
            let kind = if ax < tiles.len() { LoopKind::BlockInner { tile: tiles[ax] } } else { LoopKind::Range };
            loops.push(Iteration { kind, ..l });
        }
        n.loops = loops;
    }
    Ok(())
}

/// Remove blocking from every body nest.
pub fn unblock(ir: &mut LoopNestIR) {
    for n in ir.nests_mut() {
        n.loops = Nest::new(n.grid.clone(), n.bounds.clone(), vec![]).loops;
    }
}
