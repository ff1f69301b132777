use std::io::Write;

use num_traits::Signed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_counting_error_bound, check_mean_square_bound, check_nested_cauchy_schwarz, LemmaError, MeanSquareConfig,
    NestedEquivalence, TestFunctional,
};
use crate::model::{random_hypergraph, ComplexEdge, Hypergraph, IndexSet, SimplicialComplex};
use crate::ratio::{self, Q};
use crate::regularity::ErrorFunction;
use crate::rng;

/// A complex read off the host along a random map: every edge below size
/// `k` is visible in the color of its image, and each full-size edge is
/// dropped with probability `drop` (the first one is always kept). The
/// lower-level event is therefore never empty.
pub fn planted_complex(g: &Hypergraph, h: usize, drop: f64, seed: u64) -> SimplicialComplex {
    let mut rng = rng::stream(seed, "planted_complex");
    let k = g.k();
    let assignment: Vec<usize> = (0..g.r())
        .flat_map(|i| (0..h).map(move |_| i))
        .map(|i| rng.gen_range(0..g.parts()[i]))
        .collect();
    let mut kept_top = false;
    let colors = IndexSet::all_up_to(g.r(), k)
        .into_iter()
        .map(|idx| {
            let n = h.pow(idx.len() as u32);
            (0..n)
                .map(|off| {
                    let mut positions = vec![0; idx.len()];
                    let mut o = off;
                    for p in positions.iter_mut().rev() {
                        *p = o % h;
                        o /= h;
                    }
                    let e = ComplexEdge { index: idx, positions };
                    let host = crate::model::Edge {
                        index: idx,
                        vertices: e.vars(h).into_iter().map(|v| assignment[v]).collect(),
                    };
                    let visible = idx.len() < k || !kept_top || !rng.gen_bool(drop);
                    if idx.len() == k && visible {
                        kept_top = true;
                    }
                    visible.then(|| g.color(&host))
                })
                .collect()
        })
        .collect();
    SimplicialComplex::from_host_colors(g, k, h, colors).expect("well-formed")
}

/// Random test functional with values in `{-1, -3/4, ..., 1}`.
pub fn random_functional(g: &Hypergraph, s: &SimplicialComplex, seed: u64) -> TestFunctional {
    let mut rng = rng::stream(seed, "random_functional");
    let mut f = TestFunctional::new();
    for e in s.visible_of_size(g.k()) {
        let vals = (0..g.palette(e.index))
            .map(|_| ratio::q(rng.gen_range(-4..=4), 4))
            .collect();
        f.set(e, vals).expect("in range");
    }
    f
}

/// One fixture entry. Randomized entries expand to one run per seed in
/// `seed_start..seed_start + seed_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CorpusInstance {
    NestedCauchySchwarz {
        id: String,
        fine: Vec<u32>,
        coarse: Vec<u32>,
        #[serde(with = "ratio::serde_vec_q")]
        x: Vec<Q>,
    },
    NestedRandom {
        id: String,
        size: usize,
        seed_start: u64,
        seed_count: u64,
    },
    CountingError {
        id: String,
        r: usize,
        k: usize,
        parts: Vec<usize>,
        b: Vec<usize>,
        h: usize,
        seed_start: u64,
        seed_count: u64,
    },
    MeanSquare {
        id: String,
        r: usize,
        k: usize,
        parts: Vec<usize>,
        b: Vec<usize>,
        h: usize,
        m: usize,
        seed_start: u64,
        seed_count: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCorpus {
    pub instances: Vec<CorpusInstance>,
}

/// One line of the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaRow {
    pub instance: String,
    pub check: String,
    pub lhs: String,
    pub rhs: String,
    /// `rhs - lhs` for upper bounds, the difference itself for the
    /// Cauchy-Schwarz margin.
    pub margin: String,
    /// `pass`, `fail` or `skipped`.
    pub status: String,
}

impl LemmaRow {
    fn new(instance: String, check: &str, lhs: &Q, rhs: &Q) -> Self {
        let margin = rhs - lhs;
        LemmaRow {
            instance,
            check: check.into(),
            lhs: ratio::fmt(lhs),
            rhs: ratio::fmt(rhs),
            status: if margin.is_negative() { "fail" } else { "pass" }.into(),
            margin: ratio::fmt(&margin),
        }
    }

    fn skipped(instance: String, check: &str) -> Self {
        LemmaRow {
            instance,
            check: check.into(),
            lhs: String::new(),
            rhs: String::new(),
            margin: String::new(),
            status: "skipped".into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != "fail"
    }
}

enum Job<'a> {
    Fixed(&'a CorpusInstance),
    Seeded(&'a CorpusInstance, u64),
}

fn random_nested(size: usize, seed: u64) -> NestedEquivalence {
    let mut rng = rng::stream(seed, "nested_random");
    let coarse: Vec<u32> = (0..size).map(|_| rng.gen_range(0..3)).collect();
    let fine = coarse.iter().map(|c| c * 4 + rng.gen_range(0..3)).collect();
    let x = (0..size).map(|_| ratio::q(rng.gen_range(-8..=8), 4)).collect();
    NestedEquivalence { fine, coarse, x }
}

fn nested_rows(id: String, inst: &NestedEquivalence) -> Result<Vec<LemmaRow>, LemmaError> {
    let margin = check_nested_cauchy_schwarz(inst)?;
    let negated = NestedEquivalence {
        x: inst.x.iter().map(|v| -v).collect(),
        ..inst.clone()
    };
    let neg_margin = check_nested_cauchy_schwarz(&negated)?;
    // Report coarse <= fine as lhs <= rhs.
    let coarse = super::conditional_square_mean(&inst.coarse, &inst.x);
    let fine = &coarse + &margin;
    let mut row = LemmaRow::new(id.clone(), "nested_cauchy_schwarz", &coarse, &fine);
    if neg_margin != margin {
        row.status = "fail".into();
    }
    Ok(vec![row])
}

fn run_job(job: &Job<'_>, cfg: &MeanSquareConfig) -> Result<Vec<LemmaRow>, LemmaError> {
    match job {
        Job::Fixed(CorpusInstance::NestedCauchySchwarz { id, fine, coarse, x }) => nested_rows(
            id.clone(),
            &NestedEquivalence {
                fine: fine.clone(),
                coarse: coarse.clone(),
                x: x.clone(),
            },
        ),
        Job::Seeded(CorpusInstance::NestedRandom { id, size, .. }, seed) => {
            nested_rows(format!("{id}#{seed}"), &random_nested(*size, *seed))
        }
        Job::Seeded(CorpusInstance::CountingError { id, r, k, parts, b, h, .. }, seed) => {
            let g = random_hypergraph(*r, *k, b, parts, *seed).map_err(|e| LemmaError::Invalid(e.to_string()))?;
            let s = planted_complex(&g, *h, 0.25, *seed);
            let rep = check_counting_error_bound(&g, &s, cfg.budget)?;
            let name = format!("{id}#{seed}");
            Ok(vec![if rep.skipped {
                LemmaRow::skipped(name, "counting_error")
            } else {
                LemmaRow::new(name, "counting_error", &rep.lhs, &rep.rhs)
            }])
        }
        Job::Seeded(CorpusInstance::MeanSquare { id, r, k, parts, b, h, m, .. }, seed) => {
            let g = random_hypergraph(*r, *k, b, parts, *seed).map_err(|e| LemmaError::Invalid(e.to_string()))?;
            let s = planted_complex(&g, *h, 0.25, *seed);
            let f = random_functional(&g, &s, *seed);
            let e0 = s.visible_of_size(*k)[0].clone();
            let rep = check_mean_square_bound(&g, &s, &f, *m, &ErrorFunction::zero(), &e0, cfg)?;
            let name = format!("{id}#{seed}");
            let mut rows = vec![LemmaRow::new(name.clone(), "mean_square", &rep.lhs, &rep.rhs)];
            match (&rep.lhs_conditional, &rep.rhs_conditional) {
                (Some(l), Some(r)) => rows.push(LemmaRow::new(name, "mean_square_conditional", l, r)),
                _ if rep.conditional_skipped => rows.push(LemmaRow::skipped(name, "mean_square_conditional")),
                _ => {}
            }
            Ok(rows)
        }
        _ => unreachable!("job kinds match their instances"),
    }
}

/// Runs every check in the corpus, in fixture order.
pub fn run_corpus(corpus: &LemmaCorpus, cfg: &MeanSquareConfig) -> Result<Vec<LemmaRow>, LemmaError> {
    let mut jobs = Vec::new();
    for inst in &corpus.instances {
        match inst {
            CorpusInstance::NestedCauchySchwarz { .. } => jobs.push(Job::Fixed(inst)),
            CorpusInstance::NestedRandom { seed_start, seed_count, .. }
            | CorpusInstance::CountingError { seed_start, seed_count, .. }
            | CorpusInstance::MeanSquare { seed_start, seed_count, .. } => {
                jobs.extend((*seed_start..seed_start + seed_count).map(|s| Job::Seeded(inst, s)))
            }
        }
    }
    let rows: Vec<Vec<LemmaRow>> = jobs
        .par_iter()
        .map(|j| run_job(j, cfg))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_report_csv<W: Write>(rows: &[LemmaRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_complex;
    use num_traits::Zero;

    #[test]
    fn planted_complex_is_valid_and_embeds() {
        for seed in 0..10 {
            let g = random_hypergraph(3, 2, &[2, 3], &[2, 2, 3], seed).unwrap();
            let s = planted_complex(&g, 2, 0.5, seed);
            assert!(validate_complex(&s, &g).is_valid());
            assert!(!s.visible_of_size(2).is_empty());
            let p = crate::density::embed_probability_exact(&g, &s, 1 << 20).unwrap();
            assert!(!p.is_zero());
        }
    }

    #[test]
    fn report_csv_has_header_and_rows() {
        let corpus: LemmaCorpus = serde_json::from_str(
            r#"{"instances": [
                {"check": "nested_cauchy_schwarz", "id": "hand", "fine": [0,0,1,1], "coarse": [0,0,0,0], "x": ["0","0","1","1"]}
            ]}"#,
        )
        .unwrap();
        let rows = run_corpus(&corpus, &MeanSquareConfig::default()).unwrap();
        assert_eq!(rows[0].margin, "1/4");
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance,check,lhs,rhs,margin,status\n"));
        assert!(text.contains("hand,nested_cauchy_schwarz,1/4,1/2,1/4,pass"));
    }
}
