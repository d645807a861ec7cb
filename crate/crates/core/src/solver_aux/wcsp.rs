use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::separation::PairCompatibility;
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

pub const DEFAULT_SCALE: u64 = 1000;

/// Largest integer cost accepted; keeps every value exact in an `f64`.
const MAX_COST: u64 = 1 << 53;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryConstraint {
    pub i: usize,
    pub j: usize,
    /// Forbidden `(value_i, value_j)` tuples, each costing `top`.
    pub forbidden: Vec<(u32, u32)>,
}

/// Integer weighted CSP: one variable per aircraft, one value per
/// trajectory, unary fuel costs and hard binary conflicts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WcspInstance {
    pub domain_sizes: Vec<usize>,
    pub unary: Vec<Vec<u64>>,
    pub binary: Vec<BinaryConstraint>,
    pub top: u64,
    pub scale: u64,
}

fn scaled<S: Scalar>(cost: S, scale: u64) -> Result<u64> {
    let v = (cost.to_f64_lossy() * scale as f64).round();
    if !(v >= 0.0) || v >= MAX_COST as f64 {
        return Err(Error::Parameter(format!("scaled cost {v} does not fit an integer weight; use a smaller scale")));
    }
    Ok(v as u64)
}

/// Builds the integer model. Costs become `round(scale * kg)`. Without an
/// upper bound `top` is one more than the sum of per-variable maxima;
/// with one it is `round(scale * ub) + 1` and unary costs are capped at `top`.
pub fn formalize_wcsp<S: Scalar, C: PairCompatibility + ?Sized>(
    candidates: &CandidateSet<S>,
    compat: &C,
    upper_bound: Option<S>,
    scale: u64,
) -> Result<WcspInstance> {
    if scale == 0 {
        return Err(Error::Parameter("scale must be positive".into()));
    }
    let n = candidates.n_aircraft();
    let mut unary = Vec::with_capacity(n);
    for list in &candidates.lists {
        if list.is_empty() {
            return Err(Error::Parameter("empty domain".into()));
        }
        unary.push(list.iter().map(|t| scaled(t.cost, scale)).collect::<Result<Vec<_>>>()?);
    }
    let top = match upper_bound {
        Some(ub) => scaled(ub, scale)? + 1,
        None => {
            let mut sum = 1u64;
            for u in &unary {
                sum = sum
                    .checked_add(*u.iter().max().unwrap_or(&0))
                    .filter(|&s| s <= MAX_COST)
                    .ok_or_else(|| Error::Parameter("top exceeds the integer weight range; use a smaller scale".into()))?;
            }
            sum
        }
    };
    for u in &mut unary {
        for c in u.iter_mut() {
            *c = (*c).min(top);
        }
    }
    let mut binary = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mut forbidden = Vec::new();
            for a in 0..candidates.lists[i].len() {
                for b in 0..candidates.lists[j].len() {
                    if !compat.is_compatible(i, a, j, b)? {
                        forbidden.push((a as u32, b as u32));
                    }
                }
            }
            binary.push(BinaryConstraint { i, j, forbidden });
        }
    }
    Ok(WcspInstance { domain_sizes: candidates.domain_sizes(), unary, binary, top, scale })
}

impl WcspInstance {
    pub fn n_vars(&self) -> usize {
        self.domain_sizes.len()
    }

    /// Sum of unary costs plus `top` per violated tuple, saturating.
    pub fn assignment_cost(&self, values: &[usize]) -> u64 {
        let mut v = 0u64;
        for (x, &a) in values.iter().enumerate() {
            v = v.saturating_add(self.unary[x][a]);
        }
        for c in &self.binary {
            if c.forbidden.contains(&(values[c.i] as u32, values[c.j] as u32)) {
                v = v.saturating_add(self.top);
            }
        }
        v
    }

    /// Exhaustive minimum over assignments with cost below `top`, ties
    /// going to the lexicographically smallest assignment. Errors when the
    /// search space exceeds `cap`.
    pub fn exhaustive_optimum(&self, cap: u128) -> Result<Option<(u64, Vec<usize>)>> {
        let space = self.domain_sizes.iter().try_fold(1u128, |acc, &d| acc.checked_mul(d as u128));
        if space.is_none_or(|s| s > cap) {
            return Err(Error::Resource(format!("assignment space exceeds the cap of {cap}")));
        }
        let n = self.n_vars();
        // forbidden[j] lists (i, set) for constraints whose later variable is j.
        let mut forbidden: Vec<Vec<(usize, HashSet<(u32, u32)>)>> = vec![Vec::new(); n];
        for c in &self.binary {
            let (lo, hi, set) = if c.i < c.j {
                (c.i, c.j, c.forbidden.iter().copied().collect())
            } else {
                (c.j, c.i, c.forbidden.iter().map(|&(a, b)| (b, a)).collect())
            };
            forbidden[hi].push((lo, set));
        }
        let mut best: Option<(u64, Vec<usize>)> = None;
        let mut values = vec![0usize; n];
        self.descend(0, 0, &forbidden, &mut values, &mut best);
        Ok(best)
    }

    fn descend(
        &self,
        depth: usize,
        acc: u64,
        forbidden: &[Vec<(usize, HashSet<(u32, u32)>)>],
        values: &mut Vec<usize>,
        best: &mut Option<(u64, Vec<usize>)>,
    ) {
        if depth == self.n_vars() {
            if acc < self.top && best.as_ref().is_none_or(|b| acc < b.0) {
                *best = Some((acc, values.clone()));
            }
            return;
        }
        for a in 0..self.domain_sizes[depth] {
            let clash = forbidden[depth].iter().any(|(i, set)| set.contains(&(values[*i] as u32, a as u32)));
            if clash {
                continue;
            }
            values[depth] = a;
            self.descend(depth + 1, acc.saturating_add(self.unary[depth][a]), forbidden, values, best);
        }
    }

    pub fn to_wcsp_string(&self, name: &str) -> Result<String> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Parameter(format!("problem name {name:?} must be one non-empty token")));
        }
        let n = self.n_vars();
        let max_d = self.domain_sizes.iter().copied().max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{name} {n} {max_d} {} {}", n + self.binary.len(), self.top);
        let sizes: Vec<String> = self.domain_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        for (x, costs) in self.unary.iter().enumerate() {
            let _ = writeln!(out, "1 {x} 0 {}", costs.len());
            for (v, c) in costs.iter().enumerate() {
                let _ = writeln!(out, "{v} {c}");
            }
        }
        for c in &self.binary {
            let _ = writeln!(out, "2 {} {} 0 {}", c.i, c.j, c.forbidden.len());
            for (a, b) in &c.forbidden {
                let _ = writeln!(out, "{a} {b} {}", self.top);
            }
        }
        Ok(out)
    }
}

pub fn write_wcsp<W: Write>(inst: &WcspInstance, name: &str, mut writer: W) -> Result<()> {
    writer.write_all(inst.to_wcsp_string(name)?.as_bytes())?;
    writer.flush()?;
    Ok(())
}

pub fn export_wcsp(inst: &WcspInstance, name: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_wcsp(inst, name, std::io::BufWriter::new(file))
}

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text.lines().enumerate().flat_map(|(k, l)| l.split_whitespace().map(move |t| (k + 1, t)));
        Self { inner: Box::new(inner), line: 1 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((line, t)) => {
                self.line = line;
                Ok(t)
            }
            None => Err(self.err(format!("unexpected end of input, expected {what}"))),
        }
    }

    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let t = self.word(what)?;
        t.parse().map_err(|_| self.err(format!("expected {what}, found {t:?}")))
    }
}

/// Reads a `.wcsp` file with unary and hard binary constraints. Returns the
/// problem name and the model; `scale` is recorded as given.
pub fn parse_wcsp(text: &str, scale: u64) -> Result<(String, WcspInstance)> {
    let mut tk = Tokens::new(text);
    let name = tk.word("problem name")?.to_string();
    let n: usize = tk.num("variable count")?;
    let max_d: usize = tk.num("maximum domain size")?;
    let n_constraints: usize = tk.num("constraint count")?;
    let top: u64 = tk.num("top")?;
    let mut domain_sizes = Vec::with_capacity(n);
    for _ in 0..n {
        let d: usize = tk.num("domain size")?;
        if d > max_d {
            return Err(tk.err(format!("domain size {d} exceeds declared maximum {max_d}")));
        }
        domain_sizes.push(d);
    }
    let mut unary: Vec<Vec<u64>> = domain_sizes.iter().map(|&d| vec![0; d]).collect();
    let mut binary = Vec::new();
    let var = |tk: &mut Tokens, what: &str| -> Result<usize> {
        let x: usize = tk.num(what)?;
        if x >= n {
            return Err(tk.err(format!("variable {x} out of range")));
        }
        Ok(x)
    };
    for _ in 0..n_constraints {
        let arity: usize = tk.num("constraint arity")?;
        match arity {
            1 => {
                let x = var(&mut tk, "variable")?;
                let default: u64 = tk.num("default cost")?;
                let k: usize = tk.num("tuple count")?;
                let mut costs = vec![default; domain_sizes[x]];
                for _ in 0..k {
                    let v: usize = tk.num("value")?;
                    if v >= domain_sizes[x] {
                        return Err(tk.err(format!("value {v} out of domain of variable {x}")));
                    }
                    costs[v] = tk.num("cost")?;
                }
                for (u, c) in unary[x].iter_mut().zip(costs) {
                    *u = u.saturating_add(c).min(top);
                }
            }
            2 => {
                let i = var(&mut tk, "first variable")?;
                let j = var(&mut tk, "second variable")?;
                if i == j {
                    return Err(tk.err("binary constraint on a single variable"));
                }
                let default: u64 = tk.num("default cost")?;
                if default != 0 {
                    return Err(tk.err("only zero-default binary constraints are supported"));
                }
                let k: usize = tk.num("tuple count")?;
                let mut forbidden = Vec::with_capacity(k);
                for _ in 0..k {
                    let a: u32 = tk.num("value")?;
                    let b: u32 = tk.num("value")?;
                    let c: u64 = tk.num("cost")?;
                    if a as usize >= domain_sizes[i] || b as usize >= domain_sizes[j] {
                        return Err(tk.err(format!("tuple ({a}, {b}) out of domain")));
                    }
                    if c < top {
                        return Err(tk.err("only hard binary tuples are supported"));
                    }
                    forbidden.push((a, b));
                }
                binary.push(BinaryConstraint { i, j, forbidden });
            }
            a => return Err(tk.err(format!("unsupported arity {a}"))),
        }
    }
    if let Ok(extra) = tk.word("end of input") {
        return Err(tk.err(format!("trailing token {extra:?}")));
    }
    Ok((name, WcspInstance { domain_sizes, unary, binary, top, scale }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::{build_matrix, MatrixOptions, SeparationParams};
    use crate::solver_sbf::tests::two_by_two;
    use proptest::prelude::*;

    fn example(ub: Option<f64>) -> WcspInstance {
        let c = two_by_two();
        let m = build_matrix(&c, &SeparationParams::default(), MatrixOptions::default()).unwrap();
        formalize_wcsp(&c, &m, ub, DEFAULT_SCALE).unwrap()
    }

    #[test]
    fn two_by_two_text() {
        let w = example(None);
        assert_eq!(w.top, 4001);
        assert_eq!(
            w.to_wcsp_string("name").unwrap(),
            "name 2 2 3 4001\n2 2\n1 0 0 2\n0 1000\n1 2000\n1 1 0 2\n0 1000\n1 2000\n2 0 1 0 1\n0 0 4001\n"
        );
        let w = example(Some(3.0));
        assert_eq!(w.top, 3001);
        assert!(w.to_wcsp_string("name").unwrap().starts_with("name 2 2 3 3001\n"));
    }

    #[test]
    fn exhaustive_matches_optimum() {
        let (v, t) = example(None).exhaustive_optimum(100).unwrap().unwrap();
        assert_eq!((v, t), (3000, vec![0, 1]));
        assert_eq!(example(None).assignment_cost(&[0, 0]), 2000 + 4001);
        // An upper bound below every solution leaves nothing under top.
        assert!(example(Some(2.5)).exhaustive_optimum(100).unwrap().is_none());
        assert!(example(None).exhaustive_optimum(3).is_err());
    }

    #[test]
    fn unary_costs_capped_at_top() {
        let w = example(Some(1.5));
        assert_eq!(w.top, 1501);
        assert_eq!(w.unary[0], vec![1000, 1501]);
    }

    #[test]
    fn empty_pair_still_emitted() {
        let c = CandidateSet::from_lists(
            vec![1, 2],
            vec![vec![crate::solver_sbf::tests::lane(0.0, 1.0)], vec![crate::solver_sbf::tests::lane(50.0, 1.0)]],
        );
        let m = build_matrix(&c, &SeparationParams::default(), MatrixOptions::default()).unwrap();
        let text = formalize_wcsp(&c, &m, None, 10).unwrap().to_wcsp_string("p").unwrap();
        assert!(text.ends_with("2 0 1 0 0\n"));
        assert!(text.starts_with("p 2 1 3 21\n1 1\n"));
    }

    #[test]
    fn scale_overflow_is_a_parameter_error() {
        let c = two_by_two();
        let m = build_matrix(&c, &SeparationParams::default(), MatrixOptions::default()).unwrap();
        assert!(matches!(formalize_wcsp(&c, &m, None, u64::MAX / 2), Err(Error::Parameter(_))));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "p 2 2 3 10\n2 2\n1 0 0 2\n0 1\n1 x\n";
        match parse_wcsp(bad, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_wcsp("p 1 1 1 10\n1\n3 0 0 0\n", 1).is_err());
        assert!(parse_wcsp("p 1 1 0 10\n1\n7\n", 1).is_err());
        assert!(example(None).to_wcsp_string("two words").is_err());
    }

    #[test]
    fn nonzero_unary_default() {
        let (_, w) = parse_wcsp("p 1 3 1 10\n3\n1 0 4 1\n1 2\n", 1).unwrap();
        assert_eq!(w.unary[0], vec![4, 2, 4]);
    }

    fn arb_instance() -> impl Strategy<Value = WcspInstance> {
        proptest::collection::vec(1usize..5, 1..5).prop_flat_map(|sizes| {
            let n = sizes.len();
            let unary = sizes.iter().map(|&d| proptest::collection::vec(0u64..1000, d)).collect::<Vec<_>>();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push(
                        proptest::collection::btree_set((0..sizes[i] as u32, 0..sizes[j] as u32), 0..=sizes[i] * sizes[j])
                            .prop_map(move |s| BinaryConstraint { i, j, forbidden: s.into_iter().collect() }),
                    );
                }
            }
            (Just(sizes), unary, pairs).prop_map(|(domain_sizes, unary, binary)| {
                let top = unary.iter().map(|u| u.iter().max().copied().unwrap_or(0)).sum::<u64>() + 1;
                WcspInstance { domain_sizes, unary, binary, top, scale: 1000 }
            })
        })
    }

    proptest! {
        #[test]
        fn roundtrip_is_identical(w in arb_instance()) {
            let text = w.to_wcsp_string("rt").unwrap();
            let (name, back) = parse_wcsp(&text, 1000).unwrap();
            prop_assert_eq!(&name, "rt");
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(back.to_wcsp_string("rt").unwrap(), text);
        }

        #[test]
        fn exhaustive_is_minimal(w in arb_instance()) {
            let best = w.exhaustive_optimum(1 << 20).unwrap();
            let mut min: Option<u64> = None;
            let total: usize = w.domain_sizes.iter().product();
            for mut code in 0..total {
                let t: Vec<usize> = w.domain_sizes.iter().map(|&d| { let v = code % d; code /= d; v }).collect();
                let v = w.assignment_cost(&t);
                if v < w.top { min = Some(min.map_or(v, |m| m.min(v))); }
            }
            prop_assert_eq!(best.map(|b| b.0), min);
        }
    }
}
