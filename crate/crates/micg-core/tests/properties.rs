//! Randomized structural properties of the scoring pipeline: dominance
//! of the deprivation score, weight normalization, PCA invariances, rule
//! grammar round-trips, rank concordance under monotone maps, and the
//! quantile regression optimality band.

use std::collections::BTreeMap;

use proptest::prelude::*;

use micg_core::expr::{CmpOp, Literal, Rule, Value};
use micg_core::index::{dimension_achievements, DimensionScoring};
use micg_core::linalg::Mat;
use micg_core::{
    custom_weights, deprivation_scores, equal_nested_weights, parse_rule, pca_weights,
    quantile_fit, reference_catalog, spearman, DeprivationMatrix, MissingPolicy, WeightScheme,
    WeightVector,
};

fn matrix_from_bools(
    n: usize,
    m: usize,
    cells: &[bool],
    policy: MissingPolicy,
) -> DeprivationMatrix {
    let ids: Vec<String> = (0..m).map(|j| format!("i{j}")).collect();
    let kids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    DeprivationMatrix::new(ids, kids, policy, cells.iter().map(|&b| Some(b)).collect())
}

fn normalized_weights(raw: &[f64]) -> WeightVector {
    let total: f64 = raw.iter().sum();
    WeightVector {
        scheme: WeightScheme::Custom,
        entries: raw
            .iter()
            .enumerate()
            .map(|(j, &w)| (format!("i{j}"), w / total))
            .collect(),
        dropped: Vec::new(),
    }
}

fn shape_and_cells() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<f64>)> {
    (1usize..8, 1usize..10).prop_flat_map(|(n, m)| {
        (
            Just(n),
            Just(m),
            prop::collection::vec(any::<bool>(), n * m),
            prop::collection::vec(0.01f64..1.0, m),
        )
    })
}

proptest! {
    #[test]
    fn flipping_any_cell_to_deprived_never_lowers_scores(
        (n, m, cells, raw_w) in shape_and_cells()
    ) {
        let weights = normalized_weights(&raw_w);
        let base = matrix_from_bools(n, m, &cells, MissingPolicy::TreatNondeprived);
        let before = deprivation_scores(&base, &weights, 1.0 / 3.0).unwrap();
        for i in 0..n {
            for j in 0..m {
                if base.cell(i, j) == Some(true) {
                    continue;
                }
                let mut flipped = base.clone();
                flipped.set_cell(i, j, Some(true));
                let after = deprivation_scores(&flipped, &weights, 1.0 / 3.0).unwrap();
                for (b, a) in before.children.iter().zip(&after.children) {
                    prop_assert!(
                        a.deprivation >= b.deprivation,
                        "child {}: {} fell to {} after deprivation was added",
                        b.child_id, b.deprivation, a.deprivation
                    );
                    prop_assert!(a.achievement <= b.achievement);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn custom_weights_normalize_and_ignore_scale(
        raw in prop::collection::vec(0.0f64..10.0, 14),
        scale in 0.5f64..20.0,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 0.1);
        let catalog = reference_catalog();
        let named: BTreeMap<String, f64> = catalog
            .dimensions
            .iter()
            .zip(&raw)
            .map(|(d, &w)| (d.name.clone(), w))
            .collect();
        let w = custom_weights(&catalog, &named).unwrap();
        prop_assert_eq!(w.entries.len(), catalog.indicator_count());
        prop_assert!(w.entries.iter().all(|(_, v)| *v >= 0.0));
        let total: f64 = w.entries.iter().map(|(_, v)| v).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "weights sum to {total}");

        let scaled: BTreeMap<String, f64> =
            named.iter().map(|(k, v)| (k.clone(), v * scale)).collect();
        let w2 = custom_weights(&catalog, &scaled).unwrap();
        for ((id1, v1), (id2, v2)) in w.entries.iter().zip(&w2.entries) {
            prop_assert_eq!(id1, id2);
            prop_assert!((v1 - v2).abs() < 1e-12, "{id1}: {v1} vs {v2} after scaling");
        }
    }
}

fn pca_input() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<usize>)> {
    (4usize..24, 2usize..7).prop_flat_map(|(n, m)| {
        (
            Just(n),
            Just(m),
            prop::collection::vec(any::<bool>(), n * m),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #[test]
    fn pca_weights_survive_row_permutation_and_global_flip(
        (n, m, cells, perm) in pca_input()
    ) {
        let base = matrix_from_bools(n, m, &cells, MissingPolicy::ExcludeChild);
        let Ok(w) = pca_weights(&base) else {
            // every column constant; nothing to compare
            return Ok(());
        };

        let mut permuted_cells = vec![false; n * m];
        for (dst, &src) in perm.iter().enumerate() {
            for j in 0..m {
                permuted_cells[dst * m + j] = cells[src * m + j];
            }
        }
        let permuted = matrix_from_bools(n, m, &permuted_cells, MissingPolicy::ExcludeChild);
        let wp = pca_weights(&permuted).unwrap();
        prop_assert_eq!(&w.dropped, &wp.dropped);
        for ((id1, v1), (id2, v2)) in w.entries.iter().zip(&wp.entries) {
            prop_assert_eq!(id1, id2);
            prop_assert!((v1 - v2).abs() < 1e-9, "{id1}: {v1} vs {v2} after permutation");
        }

        let flipped_cells: Vec<bool> = cells.iter().map(|&b| !b).collect();
        let flipped = matrix_from_bools(n, m, &flipped_cells, MissingPolicy::ExcludeChild);
        let wf = pca_weights(&flipped).unwrap();
        prop_assert_eq!(&w.dropped, &wf.dropped);
        for ((id1, v1), (id2, v2)) in w.entries.iter().zip(&wf.entries) {
            prop_assert_eq!(id1, id2);
            prop_assert!((v1 - v2).abs() < 1e-9, "{id1}: {v1} vs {v2} after flipping");
        }
    }
}

fn arb_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
    ]
}

fn arb_leaf() -> impl Strategy<Value = Rule> {
    (
        "f_[a-d]",
        arb_op(),
        -800i32..800,
        "tok_[a-z]{1,4}",
        any::<bool>(),
    )
        .prop_map(|(field, op, num, tok, want_num)| {
            // ordering operators require a numeric literal
            let numeric = want_num || !matches!(op, CmpOp::Eq | CmpOp::Ne);
            let literal = if numeric {
                Literal::Num(f64::from(num) / 8.0)
            } else {
                Literal::Token(tok)
            };
            Rule::Cmp { field, op, literal }
        })
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    arb_leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Rule::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Rule::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|r| Rule::Not(Box::new(r))),
        ]
    })
}

fn render(rule: &Rule) -> String {
    match rule {
        Rule::Cmp { field, op, literal } => {
            let lit = match literal {
                Literal::Num(v) => format!("{v}"),
                Literal::Token(t) => t.clone(),
            };
            format!("{field} {op} {lit}")
        }
        Rule::And(a, b) => format!("({} AND {})", render(a), render(b)),
        Rule::Or(a, b) => format!("({} OR {})", render(a), render(b)),
        Rule::Not(inner) => format!("(NOT {})", render(inner)),
    }
}

fn arb_binding() -> impl Strategy<Value = Option<Value>> {
    prop_oneof![
        1 => Just(None),
        3 => (-800i32..800).prop_map(|v| Some(Value::Num(f64::from(v) / 8.0))),
        2 => "tok_[a-z]{1,4}".prop_map(|t| Some(Value::Cat(t))),
    ]
}

fn rules_with_bindings() -> impl Strategy<Value = (Rule, Rule, Vec<(String, Option<Value>)>)> {
    (arb_rule(), arb_rule()).prop_flat_map(|(a, b)| {
        let mut fields: Vec<String> = a.fields().into_iter().collect();
        fields.extend(b.fields());
        fields.sort();
        fields.dedup();
        let k = fields.len();
        (
            Just(a),
            Just(b),
            prop::collection::vec(arb_binding(), k)
                .prop_map(move |vals| fields.clone().into_iter().zip(vals).collect()),
        )
    })
}

proptest! {
    #[test]
    fn rule_grammar_round_trips_and_respects_de_morgan(
        (a, b, bindings) in rules_with_bindings()
    ) {
        let params = BTreeMap::new();
        let reparsed = parse_rule(&render(&a), &params).unwrap();
        prop_assert_eq!(&reparsed, &a);

        let map: BTreeMap<String, Option<Value>> = bindings.into_iter().collect();
        let lookup = |name: &str| map.get(name).and_then(|o| o.as_ref());

        let not_and = Rule::Not(Box::new(Rule::And(Box::new(a.clone()), Box::new(b.clone()))));
        let or_nots = Rule::Or(
            Box::new(Rule::Not(Box::new(a.clone()))),
            Box::new(Rule::Not(Box::new(b.clone()))),
        );
        prop_assert_eq!(not_and.eval(&lookup), or_nots.eval(&lookup));
        prop_assert_eq!(a.negated().eval(&lookup), a.eval(&lookup).map(|v| !v));
    }
}

fn paired_samples() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        let ints = prop::collection::vec(-400i32..400, n);
        (ints.clone(), ints).prop_map(|(a, b)| {
            (
                a.into_iter().map(|v| f64::from(v) / 4.0).collect(),
                b.into_iter().map(|v| f64::from(v) / 4.0).collect(),
            )
        })
    })
}

proptest! {
    #[test]
    fn rank_concordance_ignores_monotone_rescaling((a, b) in paired_samples()) {
        prop_assume!(a.iter().any(|v| *v != a[0]));
        prop_assume!(b.iter().any(|v| *v != b[0]));
        let stretched: Vec<f64> = a.iter().map(|v| (v / 50.0).exp()).collect();
        let self_rho = spearman(&a, &stretched).unwrap();
        prop_assert!((self_rho - 1.0).abs() < 1e-12, "self concordance {self_rho}");
        let rho = spearman(&a, &b).unwrap();
        let rho_stretched = spearman(&stretched, &b).unwrap();
        prop_assert!(
            (rho - rho_stretched).abs() < 1e-9,
            "{rho} vs {rho_stretched} after monotone map"
        );
    }
}

fn quantile_problem() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, f64)> {
    (6usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-800i32..800, n)
                .prop_map(|v| v.into_iter().map(|x| f64::from(x) / 8.0).collect()),
            prop::collection::vec(any::<bool>(), n),
            0.06f64..0.94,
        )
    })
}

proptest! {
    #[test]
    fn quantile_fit_residuals_sit_in_the_optimality_band(
        (y, group, tau) in quantile_problem()
    ) {
        prop_assume!(group.iter().any(|&g| g) && group.iter().any(|&g| !g));
        let rows: Vec<Vec<f64>> = group
            .iter()
            .map(|&g| vec![1.0, if g { 1.0 } else { 0.0 }])
            .collect();
        let x = Mat::from_rows(rows);
        let fit = quantile_fit(&x, &y, tau).unwrap();
        let fitted = x.mul_vec(&fit.coefficients);
        let n = y.len() as f64;
        let mut neg = 0usize;
        let mut nonpos = 0usize;
        for (yi, fi) in y.iter().zip(&fitted) {
            let r = yi - fi;
            if r < -1e-9 {
                neg += 1;
            }
            if r <= 1e-9 {
                nonpos += 1;
            }
        }
        prop_assert!(
            neg as f64 <= tau * n + 1e-9,
            "{neg} strictly negative residuals exceeds n*tau = {}", tau * n
        );
        prop_assert!(
            tau * n <= nonpos as f64 + 1e-9,
            "n*tau = {} exceeds {nonpos} non-positive residuals", tau * n
        );
    }
}

fn catalog_matrix() -> impl Strategy<Value = (usize, Vec<bool>)> {
    let m = reference_catalog().indicator_count();
    (2usize..16).prop_flat_map(move |n| (Just(n), prop::collection::vec(any::<bool>(), n * m)))
}

proptest! {
    #[test]
    fn dimension_scores_recombine_into_the_deprivation_score((n, cells) in catalog_matrix()) {
        let catalog = reference_catalog();
        let ids = catalog.indicator_ids();
        let kids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let matrix = DeprivationMatrix::new(
            ids,
            kids,
            MissingPolicy::ExcludeChild,
            cells.iter().map(|&b| Some(b)).collect(),
        );
        let weights = equal_nested_weights(&catalog);
        let by_id: BTreeMap<&str, f64> = weights
            .entries
            .iter()
            .map(|(id, w)| (id.as_str(), *w))
            .collect();
        let scores = deprivation_scores(&matrix, &weights, 1.0 / 3.0).unwrap();
        let dims =
            dimension_achievements(&matrix, &catalog, &weights, DimensionScoring::Graded).unwrap();
        for (i, child) in scores.children.iter().enumerate() {
            let mut recombined = 0.0;
            for (d, dim) in catalog.dimensions.iter().enumerate() {
                let dim_weight: f64 = dim.indicators.iter().map(|ind| by_id[ind.id.as_str()]).sum();
                let achieved = dims.scores[i][d].expect("no cell is missing");
                recombined += (1.0 - achieved) * dim_weight;
            }
            prop_assert!(
                (child.deprivation - recombined).abs() < 1e-12,
                "child {}: direct {} vs recombined {}",
                child.child_id, child.deprivation, recombined
            );
        }
    }
}
