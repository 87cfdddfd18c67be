//! C99 source emission and optional compile-and-run.
//!
//! The kernel evaluates every expression in the same operation order as the
//! interpreter; compiled with `-ffp-contract=off` the results agree bitwise.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::Path;
use std::process::Command;

use super::bindings::Bindings;
use super::code::{to_code, Code};
use super::exec::scalar_env;
use super::gridio::{read_sfgd, write_sfgd};
use crate::compiler::{Assignment, Direction, LoopKind, Nest, Operator, Section, Target};
use crate::error::{Result, SfError};
use crate::symbolic::{Access, FieldRef, Index};

fn slot_var(f: &FieldRef, off: i64) -> String {
    match off {
        0 => format!("{}_t0", f.name),
        o if o > 0 => format!("{}_tp{o}", f.name),
        o => format!("{}_tm{}", f.name, -o),
    }
}

fn offset_str(base: &str, add: i64) -> String {
    match add {
        0 => base.to_string(),
        a if a > 0 => format!("({base} + {a})"),
        a => format!("({base} - {})", -a),
    }
}

fn index_expr(a: &Access) -> String {
    let f = &a.field;
    let shape = f.data_shape();
    let halo = f.halo() as i64;
    let tpos = f.time_position();
    let mut terms = Vec::new();
    for (k, d) in f.dims.iter().enumerate() {
        let s = match (Some(k) == tpos, d.axis(), a.indices[k]) {
            (true, _, Index::Rel(o)) if f.is_buffered() => slot_var(f, o),
            (true, _, Index::Rel(o)) => offset_str("t", o),
            (_, Some(_), Index::Rel(o)) => offset_str(d.name(), o + halo),
            (_, Some(_), Index::Abs(v)) => (v + halo).to_string(),
            (_, None, Index::Abs(v)) => v.to_string(),
            (_, None, Index::Rel(_)) => "0".into(),
        };
        terms.push(s);
    }
    let mut e = format!("(long){}", terms[0]);
    for (k, t) in terms.iter().enumerate().skip(1) {
        e = format!("({e})*{} + {t}", shape[k]);
    }
    format!("{}[{e}]", f.name)
}

fn c_expr(c: &Code) -> String {
    match c {
        Code::Const(v) => {
            if v.is_sign_negative() {
                format!("({v:?})")
            } else {
                format!("{v:?}")
            }
        }
        Code::Sym(s) => s.clone(),
        Code::Load(a) => index_expr(a),
        Code::Neg(a) => format!("(-{})", c_expr(a)),
        Code::Bin(op, a, b) => format!("({} {} {})", c_expr(a), op.symbol(), c_expr(b)),
        Code::Pow(b, p) => {
            let base = c_expr(b);
            let prod = vec![base; p.unsigned_abs() as usize].join(" * ");
            if *p < 0 {
                format!("(1.0 / ({prod}))")
            } else {
                format!("({prod})")
            }
        }
    }
}

fn statement(a: &Assignment) -> Result<String> {
    let rhs = c_expr(&to_code(&a.value)?);
    Ok(match &a.target {
        Target::Temp(n) => format!("const double {n} = {rhs};"),
        Target::Field(acc) => {
            let op = if a.accumulate { "+=" } else { "=" };
            format!("{} {op} {rhs};", index_expr(acc))
        }
    })
}

fn pad(depth: usize) -> String {
    "  ".repeat(depth)
}

fn emit_nest(out: &mut String, n: &Nest, depth: usize) -> Result<()> {
    for (i, l) in n.loops.iter().enumerate() {
        let d = pad(depth + i);
        if l.parallel {
            let _ = writeln!(out, "{d}/* parallel for */");
        }
        let v = l.dim.name();
        let _ = match l.kind {
            LoopKind::Range => writeln!(out, "{d}for (int {v} = {}; {v} < {}; {v}++)", l.lo, l.hi),
            LoopKind::BlockOuter { tile } => {
                writeln!(out, "{d}for (int {v}_blk = {}; {v}_blk < {}; {v}_blk += {tile})", l.lo, l.hi)
            }
            LoopKind::BlockInner { tile } => {
                writeln!(out, "{d}for (int {v} = {v}_blk; {v} < sf_min({v}_blk + {tile}, {}); {v}++)", l.hi)
            }
        };
        let _ = writeln!(out, "{d}{{");
    }
    let inner = pad(depth + n.loops.len());
    for a in &n.body {
        let _ = writeln!(out, "{inner}{}", statement(a)?);
    }
    for i in (0..n.loops.len()).rev() {
        let _ = writeln!(out, "{}}}", pad(depth + i));
    }
    Ok(())
}

/// Buffered fields and time offsets used in the time-loop body.
fn slot_uses(op: &Operator) -> BTreeSet<(FieldRef, i64)> {
    let mut s = BTreeSet::new();
    for sec in &op.ir.body {
        let body = match sec {
            Section::Nest(n) => &n.body,
            Section::Points(p) => &p.body,
        };
        for a in body {
            let mut accs = a.value.accesses();
            if let Target::Field(acc) = &a.target {
                accs.insert(acc.clone());
            }
            for acc in accs {
                if acc.field.is_buffered() {
                    if let Some(o) = acc.time_offset() {
                        s.insert((acc.field.clone(), o));
                    }
                }
            }
        }
    }
    s
}

/// Single C99 translation unit with a `kernel` function; the command-line
/// harness used by [`run_emitted`] is compiled in with `-DSF_HARNESS`.
pub fn emit_c99(op: &Operator) -> Result<String> {
    let mut out = String::new();
    out.push_str("#include <stdio.h>\n#include <stdlib.h>\n#include <string.h>\n#include <stdint.h>\n\n");
    out.push_str("static inline int sf_min(int a, int b) { return a < b ? a : b; }\n\n");
    let mut args: Vec<String> = op.fields.iter().map(|f| format!("double *restrict {}", f.name)).collect();
    args.extend(op.parameters.iter().map(|p| format!("const double {p}")));
    args.push("const int time_m".into());
    args.push("const int time_M".into());
    let _ = writeln!(out, "void kernel({})\n{{", args.join(", "));
    if op.ir.time.is_none() {
        out.push_str("  (void)time_m;\n  (void)time_M;\n");
    }
    for (n, e) in &op.ir.scalars {
        let _ = writeln!(out, "  const double {n} = {};", c_expr(&to_code(e)?));
    }
    for f in &op.ir.temporaries {
        let _ = writeln!(out, "  double *restrict {} = (double *)calloc({}, sizeof(double));", f.name, f.data_len());
    }
    for n in &op.ir.prologue {
        emit_nest(&mut out, n, 1)?;
    }
    let mut depth = 1;
    if let Some(t) = &op.ir.time {
        match t.direction {
            Direction::Forward => out.push_str("  for (int t = time_m; t <= time_M; t++)\n  {\n"),
            Direction::Backward => out.push_str("  for (int t = time_M; t >= time_m; t--)\n  {\n"),
        }
        depth = 2;
        for (f, o) in slot_uses(op) {
            let len = f.time_len().unwrap();
            let _ = writeln!(out, "    const int {} = (((t + ({o})) % {len}) + {len}) % {len};", slot_var(&f, o));
        }
    }
    for sec in &op.ir.body {
        match sec {
            Section::Nest(n) => emit_nest(&mut out, n, depth)?,
            Section::Points(p) => {
                let _ = writeln!(out, "{}/* serial point updates */", pad(depth));
                for a in &p.body {
                    let _ = writeln!(out, "{}{}", pad(depth), statement(a)?);
                }
            }
        }
    }
    if op.ir.time.is_some() {
        out.push_str("  }\n");
    }
    for f in &op.ir.temporaries {
        let _ = writeln!(out, "  free({});", f.name);
    }
    out.push_str("}\n");
    out.push_str(&harness(op));
    Ok(out)
}

fn harness(op: &Operator) -> String {
    let mut s = String::from(
        r#"
#ifdef SF_HARNESS
static long sf_header(FILE *f, long n, const char *path)
{
  unsigned char h[8];
  if (fread(h, 1, 8, f) != 8 || memcmp(h, "SFGD", 4) != 0 || h[5] != 8) {
    fprintf(stderr, "bad header in %s\n", path);
    exit(2);
  }
  long count = 1;
  for (int i = 0; i < h[4]; i++) {
    uint32_t d;
    if (fread(&d, 4, 1, f) != 1) exit(2);
    count *= (long)d;
  }
  long hl = ((8 + 4 * (long)h[4] + 7) / 8) * 8;
  if (count != n) {
    fprintf(stderr, "size mismatch in %s\n", path);
    exit(2);
  }
  fseek(f, hl, SEEK_SET);
  return hl;
}

static double *sf_load(const char *dir, const char *name, long n)
{
  char path[4096];
  snprintf(path, sizeof path, "%s/%s.sfgd", dir, name);
  FILE *f = fopen(path, "rb");
  if (!f) {
    fprintf(stderr, "cannot open %s\n", path);
    exit(2);
  }
  sf_header(f, n, path);
  double *p = (double *)malloc(n * sizeof(double));
  if (fread(p, sizeof(double), n, f) != (size_t)n) {
    fprintf(stderr, "short read in %s\n", path);
    exit(2);
  }
  fclose(f);
  return p;
}

static void sf_store(const char *dir, const char *name, const double *p, long n)
{
  char path[4096];
  snprintf(path, sizeof path, "%s/%s.sfgd", dir, name);
  FILE *f = fopen(path, "r+b");
  if (!f) exit(2);
  sf_header(f, n, path);
  if (fwrite(p, sizeof(double), n, f) != (size_t)n) exit(2);
  fclose(f);
}

int main(int argc, char **argv)
{
  if (argc < 2) {
    fprintf(stderr, "usage: %s DIR\n", argv[0]);
    return 1;
  }
  const char *dir = argv[1];
"#,
    );
    for f in &op.fields {
        let _ = writeln!(s, "  double *{0} = sf_load(dir, \"{0}\", {1});", f.name, f.data_len());
    }
    let np = op.parameters.len();
    let _ = writeln!(s, "  double sc[{}];", np + 2);
    s.push_str("  char path[4096];\n  snprintf(path, sizeof path, \"%s/scalars.bin\", dir);\n");
    s.push_str("  FILE *f = fopen(path, \"rb\");\n");
    let _ = writeln!(s, "  if (!f || fread(sc, sizeof(double), {0}, f) != {0}) return 2;", np + 2);
    s.push_str("  fclose(f);\n");
    let mut call: Vec<String> = op.fields.iter().map(|f| f.name.clone()).collect();
    call.extend((0..np).map(|i| format!("sc[{i}]")));
    call.push(format!("(int)sc[{np}]"));
    call.push(format!("(int)sc[{}]", np + 1));
    let _ = writeln!(s, "  kernel({});", call.join(", "));
    for f in &op.fields {
        let _ = writeln!(s, "  sf_store(dir, \"{0}\", {0}, {1});\n  free({0});", f.name, f.data_len());
    }
    s.push_str("  return 0;\n}\n#endif\n");
    s
}

fn compiler() -> String {
    std::env::var("SF_CC").unwrap_or_else(|_| "cc".into())
}

/// Whether a C compiler is available.
pub fn toolchain_available() -> bool {
    Command::new(compiler()).arg("--version").output().is_ok_and(|o| o.status.success())
}

/// Compile `source` (from [`emit_c99`] of `op`) and run it on `b`, updating `b` in place.
pub fn run_emitted(op: &Operator, source: &str, b: &mut Bindings) -> Result<()> {
    if !toolchain_available() {
        return Err(SfError::Capability(format!("C compiler '{}' not found", compiler())));
    }
    let env = scalar_env(op, b)?;
    let (tm, tmax) = b.resolve_time(op)?.unwrap_or((0, 0));
    let dir = tempfile::tempdir()?;
    let d: &Path = dir.path();
    let src = d.join("kernel.c");
    std::fs::write(&src, source)?;
    let exe = d.join("kernel");
    let out = Command::new(compiler())
        .args(["-std=c99", "-O2", "-ffp-contract=off", "-DSF_HARNESS", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-lm")
        .output()?;
    if !out.status.success() {
        return Err(SfError::Capability(format!("C compilation failed: {}", String::from_utf8_lossy(&out.stderr))));
    }
    for f in &op.fields {
        write_sfgd(&d.join(format!("{}.sfgd", f.name)), b.array(&f.name)?)?;
    }
    let mut sc: Vec<u8> = Vec::new();
    for p in &op.parameters {
        sc.extend_from_slice(&env[p].to_le_bytes());
    }
    sc.extend_from_slice(&(tm as f64).to_le_bytes());
    sc.extend_from_slice(&(tmax as f64).to_le_bytes());
    std::fs::write(d.join("scalars.bin"), sc)?;
    let run = Command::new(&exe).arg(d).output()?;
    if !run.status.success() {
        return Err(SfError::Capability(format!("emitted kernel failed: {}", String::from_utf8_lossy(&run.stderr))));
    }
    for f in &op.fields {
        let a = read_sfgd(&d.join(format!("{}.sfgd", f.name)))?;
        b.set_array(&f.name, a);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::exec::{execute_with, ExecOptions};
    use crate::backend::Array;
    use crate::grid::Grid;
    use crate::symbolic::{Equation, Expr};

    #[test]
    fn copy_kernel_source() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let a = FieldRef::dense("a", &g, 2).unwrap();
        let c = FieldRef::dense("c", &g, 2).unwrap();
        let op = Operator::new(&[Equation::new(c.center(), a.center())]).unwrap();
        let src = emit_c99(&op).unwrap();
        assert!(src.contains("void kernel(double *restrict a, double *restrict c, const int time_m, const int time_M)"));
        assert!(src.contains("for (int x = 0; x < 8; x++)"));
        assert!(src.contains("c[(long)(x + 1)] = a[(long)(x + 1)];"));
        let kernel = src.split("#ifdef SF_HARNESS").next().unwrap();
        assert_eq!(kernel.matches("for (").count(), 1);
    }

    #[test]
    fn backward_descends() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let v = FieldRef::time("v", &g, 2, 2, None).unwrap();
        let op = Operator::new(&[Equation::new(v.backward(), 2 * v.center() - v.forward())]).unwrap();
        let src = emit_c99(&op).unwrap();
        assert!(src.contains("for (int t = time_M; t >= time_m; t--)"));
        assert!(src.contains("const int v_tm1 = (((t + (-1)) % 3) + 3) % 3;"));
    }

    #[test]
    fn compiled_matches_interpreter() {
        if !toolchain_available() {
            return;
        }
        let g = Grid::new(&[21, 17], &[1.0, 1.5]).unwrap();
        let u = FieldRef::time("u", &g, 4, 2, None).unwrap();
        let m = FieldRef::dense("m", &g, 4).unwrap();
        let st = crate::symbolic::solve_linear(
            &Equation::new(m.center() * u.dt2() - u.laplace(), Expr::zero()),
            &u.forward(),
        )
        .unwrap();
        let op = Operator::new(&[Equation::new(u.forward(), st)]).unwrap();
        let mut b = op.bindings();
        b.set_scalar("dt", 0.3);
        b.array_mut("m").unwrap().fill(1.0);
        let mut a = Array::zeros(&[21, 17]);
        a.set(&[10, 8], 1.0);
        b.set_interior(&u, Some(1), &a).unwrap();
        b.set_nt(30);
        let mut c = b.clone();
        execute_with(&op, &mut b, &ExecOptions::serial()).unwrap();
        run_emitted(&op, &emit_c99(&op).unwrap(), &mut c).unwrap();
        assert_eq!(b.array("u").unwrap(), c.array("u").unwrap());
    }
}
