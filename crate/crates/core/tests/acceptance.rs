//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use kwm::analysis::{chain_rule_residual, dirichlet_form, entropy, lsc_search, verify_reversible, SearchOptions};
use kwm::chains::{build_kernel, ChainSpec};
use kwm::comparison::{congestion_delta, formula_bound, ComparisonContext, CONGESTION_BOUND};
use kwm::generic::{
    generic_fraction_exact, generic_fraction_mc, union_bound_fraction, verify_tgrev_product_structure,
    PRODUCT_ENTRY_TOL, PRODUCT_GAP_TOL,
};
use kwm::mixing::{
    kwise_stat_mc, mixing_series, mixing_time_exact, KwiseSource, KwiseTestConfig, MixingPoint, Starts, Statistic,
};
use kwm::primitives::{enumerate_gates, gate_count, GateSampler};
use kwm::rng::stream_rng;
use kwm::{BitString, GateMeasure, KernelF64, LogBase, Partition, Rational, Result, Scalar, StateCap, TupleSpace};
use rand::Rng;

type Check = Result<(bool, String)>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn kernel(spec: ChainSpec) -> Result<KernelF64> {
    build_kernel(&spec, StateCap::DEFAULT)
}

fn kernel_exactness() -> Check {
    let mut ok = true;
    let mut worst_row: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    for (k, n) in [(2usize, 6u32), (3, 8)] {
        let ucc = kernel(ChainSpec::Ucc { k, colors: n })?;
        let cc = kernel(ChainSpec::Cc { k, colors: n })?;
        for (kern, lp) in [(&ucc, 1.0 / n as f64), (&cc, 1.0 / (n as usize - k + 1) as f64)] {
            worst_row = worst_row.max(kern.max_row_sum_error());
            worst_balance = worst_balance.max(verify_reversible(kern).max_violation);
            ok &= (0..kern.size()).all(|x| (kern.self_loop(x) - lp).abs() <= 1e-15);
        }
    }
    let rev = kernel(ChainSpec::Rev { k: 2, n: 3, mode: GateMeasure::ParameterUniform })?;
    worst_row = worst_row.max(rev.max_row_sum_error());
    worst_balance = worst_balance.max(verify_reversible(&rev).max_violation);
    ok &= worst_row <= 1e-12 && worst_balance <= 1e-12;
    Ok((ok, format!("max row-sum error {worst_row:.1e}, max detailed-balance violation {worst_balance:.1e}")))
}

fn congestion() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, n) in [(2usize, 8u32), (3, 8), (4, 10)] {
        let c = congestion_delta(k, n, StateCap::DEFAULT)?;
        let formula = formula_bound(k, n)?;
        ok &= c.exact() <= Rational::from_count(CONGESTION_BOUND) && c.exact() <= formula;
        parts.push(format!("A({k},{n}) = {}/{} (formula {formula})", c.num, c.den));
    }
    Ok((ok, parts.join(", ")))
}

fn comparison_transfer() -> Check {
    let ctx = ComparisonContext::<f64>::new(3, 8, StateCap::DEFAULT)?;
    let a = ctx.congestion.value::<f64>();
    let mut rng = stream_rng(3, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let f: Vec<f64> = (0..ctx.ucc.size()).map(|_| rng.random::<f64>()).collect();
        let g: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
        let slack = dirichlet_form(&ctx.ucc, &g)? - a * dirichlet_form(&ctx.cc, &g)?;
        worst = worst.max(slack);
    }
    Ok((worst <= 1e-12, format!("max E_ucc − A·E_cc = {worst:.3e} with A = {a}")))
}

fn chain_rule() -> Check {
    let space = TupleSpace::new(2, 6)?;
    let pi = vec![1.0 / space.size() as f64; space.size()];
    let mut rng = stream_rng(4, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f: Vec<f64> = (0..space.size()).map(|_| rng.random::<f64>() * 10.0 + 1e-3).collect();
        let ent = entropy(&pi, &f)?;
        for i in 0..space.k() {
            worst = worst.max(chain_rule_residual(&space, &f, i)? / ent);
        }
    }
    Ok((worst <= 1e-10, format!("max relative residual {worst:.3e}")))
}

fn log_sobolev() -> Check {
    let opts = SearchOptions { restarts: 200, ..SearchOptions::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, n) in [(2usize, 6u32), (3, 8)] {
        let out = lsc_search(&kernel(ChainSpec::Ucc { k, colors: n })?, &opts)?;
        let bound = 1.0 / (12.0 * k as f64 * (n as f64).ln());
        ok &= out.best_ratio >= bound;
        parts.push(format!("ucc({k},{n}) {:.4} ≥ {bound:.4}", out.best_ratio));
    }
    let mut worst_margin = f64::INFINITY;
    for n in 2..=16u32 {
        let out = lsc_search(&kernel(ChainSpec::Complete { colors: n })?, &opts)?;
        if n >= 3 {
            let bound = 1.0 / (3.0 * (n as f64).ln());
            ok &= out.best_ratio >= bound;
            worst_margin = worst_margin.min(out.best_ratio / bound);
        }
    }
    parts.push(format!("K_N min ratio/bound {worst_margin:.3}"));
    Ok((ok, parts.join(", ")))
}

fn gates() -> Check {
    let mut rng = stream_rng(6, 0);
    let mut ok = true;
    for n in 3..=10 {
        let sampler = GateSampler::new(n, GateMeasure::ParameterUniform)?;
        for _ in 0..10_000 {
            let g = sampler.sample(&mut rng);
            let x = BitString::random(n, &mut rng)?;
            ok &= g.apply(&g.apply(&x)?)? == x;
        }
    }
    let all = enumerate_gates(3)?;
    ok &= all.len() == gate_count(3) && all.len() == 192;
    for g in &all {
        let mut table = g.permutation_table(3)?;
        table.sort_unstable();
        ok &= table == (0..8).collect::<Vec<u32>>();
    }
    Ok((ok, format!("80000 involution draws, {} gates bijective on 3 bits", all.len())))
}

fn exact_mixing() -> Check {
    let rev = kernel(ChainSpec::Rev { k: 2, n: 3, mode: GateMeasure::ParameterUniform })?;
    let run = mixing_time_exact(&rev, 0.25, &Starts::All, 100_000)?;
    let series = mixing_series(&rev, &Starts::All, 2 * run.tau)?;
    let monotone = series.windows(2).all(|w| w[1].tv <= w[0].tv);
    let long = mixing_series(&rev, &Starts::All, 10_000)?;
    let pointwise: Option<&MixingPoint<f64>> = long.iter().find(|p| p.pointwise < 0.1);
    let ok = monotone && pointwise.is_some();
    let detail = match pointwise {
        Some(p) => format!(
            "τ_1/4 = {}, TV nonincreasing to t = {}: {monotone}, pointwise < 0.1 at t = {}",
            run.tau,
            2 * run.tau,
            p.t
        ),
        None => format!("τ_1/4 = {}, pointwise error never below 0.1", run.tau),
    };
    Ok((ok, detail))
}

fn kwise_test() -> Check {
    let base = KwiseTestConfig {
        n: 12,
        k: 2,
        gates: 2000,
        samples: 100_000,
        statistic: Statistic::XorProfile,
        bins: 64,
        ..KwiseTestConfig::default()
    };
    let mixed = kwise_stat_mc(&base)?;
    let none = kwise_stat_mc(&KwiseTestConfig { gates: 0, ..base.clone() })?;
    let uniform = kwise_stat_mc(&KwiseTestConfig { source: KwiseSource::Uniform, ..base })?;
    let ok = !mixed.rejects(0.001) && none.rejects(0.001) && !uniform.rejects(0.001);
    Ok((
        ok,
        format!(
            "p = {:.4} (2000 gates), {:.1e} (0 gates), {:.4} (uniform)",
            mixed.p_value, none.p_value, uniform.p_value
        ),
    ))
}

fn product_structure() -> Check {
    let partition = Partition::with_override(3, 2, 2, 1)?;
    let r = verify_tgrev_product_structure(&partition, StateCap::DEFAULT)?;
    let ok = r.mixture_deviation <= PRODUCT_ENTRY_TOL
        && r.block_factor_deviation <= PRODUCT_ENTRY_TOL
        && r.remainder_factor_deviation <= PRODUCT_ENTRY_TOL
        && r.gap_deviation <= PRODUCT_GAP_TOL;
    Ok((
        ok,
        format!(
            "mixture {:.1e}, block vs cc(2,4) {:.1e}, remainder {:.1e}, gap {} vs {}",
            r.mixture_deviation, r.block_factor_deviation, r.remainder_factor_deviation, r.gap_direct, r.gap_predicted
        ),
    ))
}

fn genericity() -> Check {
    let partition = Partition::standard(512, 2, LogBase::Two)?;
    let mc = generic_fraction_mc(&partition, 10_000, 0)?;
    let oracle = union_bound_fraction(&partition);
    let mc_ok = mc.fraction >= 0.99 && oracle >= mc.lower && oracle <= mc.upper;
    let toy = Partition::with_override(2, 2, 1, 1)?;
    let (hits, total) = generic_fraction_exact(&toy, StateCap::DEFAULT)?;
    let toy_ok = 2 * hits == total;
    Ok((
        mc_ok && toy_ok,
        format!(
            "fraction {} in [{:.5}, {:.5}], union bound {oracle}; toy {hits}/{total} (expected 1/2)",
            mc.fraction, mc.lower, mc.upper
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("kernel exactness", Duration::from_secs(10), kernel_exactness),
        ("congestion", Duration::from_secs(60), congestion),
        ("comparison transfer", Duration::from_secs(30), comparison_transfer),
        ("chain-rule identity", Duration::from_secs(10), chain_rule),
        ("log-Sobolev non-falsification", Duration::from_secs(300), log_sobolev),
        ("gate involution and bijectivity", Duration::from_secs(5), gates),
        ("exact mixing", Duration::from_secs(60), exact_mixing),
        ("k-wise statistical test", Duration::from_secs(300), kwise_test),
        ("product structure", Duration::from_secs(10), product_structure),
        ("genericity", Duration::from_secs(30), genericity),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {:>2} {name} ({:.2} s, budget {} s): {detail}",
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
