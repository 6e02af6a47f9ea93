//! Exported programs solved by an external MILP solver (scipy/HiGHS).
//! Skipped when python3 with scipy is not available.

use std::process::Command;

use binomial_knapsack::ilp::mps::export_mps;
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{KnapsackTestSpec, PreparedTest};
use binomial_knapsack::prob::Design;

const SCRIPT: &str = r#"
import sys
import numpy as np
from scipy.optimize import milp, LinearConstraint, Bounds
rows, cols, rhs, senses, obj, lo, up, integ = {}, {}, {}, {}, {}, {}, {}, {}
order = []
section = None
in_int = False
entries = []
for line in open(sys.argv[1]):
    if line.startswith('*') or not line.strip():
        continue
    f = line.split()
    if not line[0].isspace():
        section = f[0]
        continue
    if section == 'ROWS':
        senses[f[1]] = f[0]
    elif section == 'COLUMNS':
        if len(f) >= 3 and f[1] == "'MARKER'":
            in_int = f[2] == "'INTORG'"
            continue
        if f[0] not in cols:
            cols[f[0]] = len(order); order.append(f[0]); integ[f[0]] = in_int
        entries.append((f[0], f[1], float(f[2])))
    elif section == 'RHS':
        rhs[f[1]] = float(f[2])
    elif section == 'BOUNDS':
        (up if f[0] == 'UP' else lo)[f[2]] = float(f[3])
names = [r for r in senses if senses[r] != 'N']
ridx = {r: i for i, r in enumerate(names)}
A = np.zeros((len(names), len(order)))
c = np.zeros(len(order))
for col, row, v in entries:
    if senses[row] == 'N':
        c[cols[col]] = v
    else:
        A[ridx[row], cols[col]] = v
lb_r = np.array([rhs.get(r, 0.0) if senses[r] == 'G' else -np.inf for r in names])
ub_r = np.array([rhs.get(r, 0.0) if senses[r] == 'L' else np.inf for r in names])
lb = np.array([lo.get(n, 0.0) for n in order])
ub = np.array([up.get(n, np.inf) for n in order])
res = milp(c, constraints=LinearConstraint(A, lb_r, ub_r), bounds=Bounds(lb, ub),
           integrality=np.array([1 if integ[n] else 0 for n in order]),
           options={'mip_rel_gap': 0, 'presolve': True})
print(repr(-res.fun) if res.success else 'fail ' + res.message)
"#;

fn scipy_available() -> bool {
    Command::new("python3")
        .args(["-c", "import scipy.optimize, numpy"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

#[test]
fn external_solver_agrees() {
    if !scipy_available() {
        eprintln!("python3 with scipy not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("solve.py");
    std::fs::write(&script, SCRIPT).unwrap();
    let cases = [
        (KnapsackTestSpec::apk(Design::new(4, 4).unwrap(), 0.05).unwrap(), 0.05),
        (KnapsackTestSpec::apk(Design::new(6, 5).unwrap(), 0.025).unwrap(), 0.025),
        (KnapsackTestSpec::mpk(Design::new(4, 4).unwrap(), 0.1).unwrap(), 0.1),
    ];
    for (k, (spec, alpha)) in cases.iter().enumerate() {
        let prepared = PreparedTest::new(spec).unwrap();
        let model = prepared.model(*alpha).unwrap();
        let path = dir.path().join(format!("m{k}.mps"));
        export_mps(&model, &path).unwrap();
        let ours = prepared.solve_at(*alpha, &SolveOptions::with_tol(1e-10)).unwrap().objective_value;
        let out = Command::new("python3").arg(&script).arg(&path).output().unwrap();
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let theirs: f64 = text.trim().parse().unwrap_or_else(|_| panic!("solver output: {text}"));
        assert!((ours - theirs).abs() < 1e-7, "case {k}: ours {ours}, external {theirs}");
    }
}
