use kwm::analysis::{chain_rule_residual, entropy, lsc_search, spectral_gap, SearchOptions};
use kwm::chains::{build_kernel, ChainSpec};
use kwm::comparison::{congestion_delta, formula_bound, ComparisonContext, CONGESTION_BOUND};
use kwm::generic::{generic_fraction_exact, generic_fraction_mc, union_bound_fraction, verify_tgrev_product_structure};
use kwm::io::{csv_line, fmt17, write_kernel_dump};
use kwm::mixing::{empirical_tv_series, kwise_stat_mc, kwise_tv_series, mixing_time_exact, KwiseTestConfig, Starts};
use kwm::rng::stream_rng;
use kwm::stats::wilson_interval;
use kwm::{Error, KernelF64, Result, StateCap, TupleSpace};
use rand::Rng;
use serde_json::json;

use crate::{ChainArgs, Command, Output};

struct Table {
    lines: Vec<String>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { lines: vec![csv_line(header)] }
    }

    fn row(&mut self, fields: Vec<String>) {
        self.lines.push(csv_line(&fields));
    }

    fn finish(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn kernel(args: &ChainArgs, cap: StateCap) -> Result<(ChainSpec, KernelF64)> {
    let spec = args.spec()?;
    let kernel = build_kernel(&spec, cap)?;
    Ok((spec, kernel))
}

fn starts(start: Option<usize>) -> Starts {
    start.map_or(Starts::All, |s| Starts::Only(vec![s]))
}

/// Reference log-Sobolev lower bound for the chain, natural log and base 2.
fn reference_bound(spec: &ChainSpec) -> Option<(f64, f64)> {
    match spec {
        ChainSpec::Ucc { k, colors } => {
            let c = 12.0 * *k as f64;
            Some((1.0 / (c * (*colors as f64).ln()), 1.0 / (c * (*colors as f64).log2())))
        }
        ChainSpec::Cc { k, colors } => {
            let c = 19.0 * 12.0 * *k as f64;
            Some((1.0 / (c * (*colors as f64).ln()), 1.0 / (c * (*colors as f64).log2())))
        }
        ChainSpec::Complete { colors } if *colors >= 3 => {
            Some((1.0 / (3.0 * (*colors as f64).ln()), 1.0 / (3.0 * (*colors as f64).log2())))
        }
        _ => None,
    }
}

fn random_functions(size: usize, count: usize, seed: u64, floor: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            (0..size).map(|_| floor + rng.random::<f64>()).collect()
        })
        .collect()
}

pub fn run(command: &Command, seed: u64, cap: StateCap) -> Result<Output> {
    match command {
        Command::KernelDump { chain } => {
            let (_, k) = kernel(chain, cap)?;
            let mut buf = Vec::new();
            write_kernel_dump(&k, &mut buf)?;
            let entries: Vec<_> = k.entries().map(|(x, y, p)| json!([x, y, p])).collect();
            Ok(Output {
                csv: String::from_utf8(buf).expect("dump is ASCII"),
                json: json!({ "header": k.meta(), "states": k.size(), "entries": entries }),
            })
        }
        Command::Gap { chain } => {
            let (_, k) = kernel(chain, cap)?;
            let gap = spectral_gap(&k)?;
            let mut t = Table::new(&["kernel_id", "states", "spectral_gap"]);
            t.row(vec![k.meta().id(), k.size().to_string(), fmt17(gap)]);
            Ok(Output {
                csv: t.finish(),
                json: json!({ "kernel_id": k.meta().id(), "states": k.size(), "spectral_gap": gap }),
            })
        }
        Command::LscSearch { chain, restarts, tol, max_iters } => {
            let (spec, k) = kernel(chain, cap)?;
            let opts = SearchOptions { restarts: *restarts, tol: *tol, max_iters: *max_iters, seed };
            let out = lsc_search(&k, &opts)?;
            let bound = reference_bound(&spec);
            let margin = bound.map(|(b, _)| out.best_ratio - b);
            let mut t = Table::new(&[
                "kernel_id",
                "restarts",
                "best_ratio",
                "reference_bound",
                "margin",
                "reference_bound_log2",
            ]);
            t.row(vec![
                k.meta().id(),
                restarts.to_string(),
                fmt17(out.best_ratio),
                opt17(bound.map(|b| b.0)),
                opt17(margin),
                opt17(bound.map(|b| b.1)),
            ]);
            Ok(Output {
                csv: t.finish(),
                json: json!({
                    "kernel_id": k.meta().id(),
                    "restarts": restarts,
                    "best_ratio": out.best_ratio,
                    "reference_bound": bound.map(|b| b.0),
                    "margin": margin,
                    "reference_bound_log2": bound.map(|b| b.1),
                    "best_restart": out.best_restart,
                    "degenerate_restarts": out.degenerate,
                    "log_base": "e",
                    "witness": &out.witness[..],
                }),
            })
        }
        Command::ChainRuleCheck { k, colors, functions } => {
            let space = TupleSpace::new(*k, *colors)?;
            cap.check(space.size() as u128)?;
            let pi = vec![1.0 / space.size() as f64; space.size()];
            let mut t = Table::new(&["k", "N", "functions", "i", "max_abs_residual", "max_rel_residual"]);
            let mut rows = Vec::new();
            let fs = random_functions(space.size(), *functions, seed, 1e-3);
            for i in 0..*k {
                let (mut abs, mut rel): (f64, f64) = (0.0, 0.0);
                for f in &fs {
                    let r = chain_rule_residual(&space, f, i)?;
                    abs = abs.max(r);
                    rel = rel.max(r / entropy(&pi, f)?);
                }
                t.row(vec![
                    k.to_string(),
                    colors.to_string(),
                    functions.to_string(),
                    i.to_string(),
                    fmt17(abs),
                    fmt17(rel),
                ]);
                rows.push(json!({ "i": i, "max_abs_residual": abs, "max_rel_residual": rel }));
            }
            Ok(Output { csv: t.finish(), json: json!({ "k": k, "N": colors, "functions": functions, "rows": rows }) })
        }
        Command::Congestion { k, colors } => {
            let c = congestion_delta(*k, *colors, cap)?;
            let formula = formula_bound(*k, *colors)?;
            let formula_f = fmt17(
                formula.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
                    / formula.denom().to_string().parse::<f64>().unwrap_or(f64::NAN),
            );
            let argmax = format!("{:?}->{:?}", c.argmax.0, c.argmax.1);
            let mut t = Table::new(&[
                "k",
                "N",
                "A_delta_exact",
                "A_delta_fraction",
                "paper_bound_19",
                "formula_bound",
                "argmax_edge",
            ]);
            t.row(vec![
                k.to_string(),
                colors.to_string(),
                fmt17(c.value::<f64>()),
                format!("{}/{}", c.num, c.den),
                CONGESTION_BOUND.to_string(),
                formula_f,
                argmax,
            ]);
            Ok(Output {
                csv: t.finish(),
                json: json!({
                    "k": k,
                    "N": colors,
                    "A_delta_exact": c.value::<f64>(),
                    "A_delta_fraction": format!("{}/{}", c.num, c.den),
                    "paper_bound_19": CONGESTION_BOUND,
                    "formula_bound": formula.to_string(),
                    "argmax_edge": c.argmax,
                }),
            })
        }
        Command::CompareCheck { k, colors, functions } => {
            let ctx = ComparisonContext::<f64>::new(*k, *colors, cap)?;
            let mut worst: f64 = 0.0;
            for f in random_functions(ctx.ucc.size(), *functions, seed, 0.0) {
                let g: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
                worst = worst.max(ctx.residual(&g)?);
            }
            let a = ctx.congestion.value::<f64>();
            let pass = worst <= 1e-12;
            let mut t = Table::new(&["k", "N", "functions", "A_delta", "max_residual", "pass"]);
            t.row(vec![
                k.to_string(),
                colors.to_string(),
                functions.to_string(),
                fmt17(a),
                fmt17(worst),
                pass.to_string(),
            ]);
            Ok(Output {
                csv: t.finish(),
                json: json!({ "k": k, "N": colors, "functions": functions, "A_delta": a, "max_residual": worst, "pass": pass }),
            })
        }
        Command::MixExact { chain, eps, max_t, start } => {
            let (_, k) = kernel(chain, cap)?;
            let run = mixing_time_exact(&k, *eps, &starts(*start), *max_t)?;
            let id = k.meta().id();
            let mut t = Table::new(&["kernel_id", "epsilon", "tau", "t", "tv", "pointwise"]);
            for p in &run.series {
                t.row(vec![
                    id.clone(),
                    fmt17(*eps),
                    run.tau.to_string(),
                    p.t.to_string(),
                    fmt17(p.tv),
                    fmt17(p.pointwise),
                ]);
            }
            Ok(Output {
                csv: t.finish(),
                json: json!({ "kernel_id": id, "epsilon": eps, "tau": run.tau, "series": run.series }),
            })
        }
        Command::MixMc { chain, start, t_max, samples } => {
            let (spec, k) = kernel(chain, cap)?;
            let times: Vec<usize> = (0..=*t_max).collect();
            let series = empirical_tv_series(&spec, &k, *start, &times, *samples, seed)?;
            let mut t = Table::new(&["t", "tv"]);
            for p in &series {
                t.row(vec![p.t.to_string(), fmt17(p.tv)]);
            }
            Ok(Output {
                csv: t.finish(),
                json: json!({ "kernel_id": k.meta().id(), "start": start, "samples": samples, "series": series }),
            })
        }
        Command::KwiseExact { n, k, t: steps, mode, start } => {
            let series = kwise_tv_series(*n, *k, *steps, *mode, &starts(*start), cap)?;
            let mut t = Table::new(&["t", "tv"]);
            for p in &series {
                t.row(vec![p.t.to_string(), fmt17(p.tv)]);
            }
            let series_json: Vec<_> = series.iter().map(|p| json!({ "t": p.t, "tv": p.tv })).collect();
            Ok(Output { csv: t.finish(), json: json!({ "n": n, "k": k, "gate_mode": mode, "series": series_json }) })
        }
        Command::KwiseTest { n, k, gates, samples, statistic, bins, mode, source } => {
            let config = KwiseTestConfig {
                n: *n,
                k: *k,
                gates: *gates,
                samples: *samples,
                statistic: *statistic,
                bins: *bins,
                seed,
                gate_mode: *mode,
                source: *source,
            };
            let r = kwise_stat_mc(&config)?;
            let mut t = Table::new(&[
                "n",
                "k",
                "gates",
                "M",
                "statistic",
                "bins",
                "chi2",
                "dof",
                "p_value",
                "seed",
                "gate_mode",
                "source",
            ]);
            t.row(vec![
                r.n.to_string(),
                r.k.to_string(),
                r.gates.to_string(),
                r.samples.to_string(),
                r.statistic.to_string(),
                r.bins.to_string(),
                fmt17(r.chi2),
                r.dof.to_string(),
                fmt17(r.p_value),
                r.seed.to_string(),
                r.gate_mode.to_string(),
                serde_json::to_value(r.source)?.as_str().unwrap_or_default().to_string(),
            ]);
            Ok(Output { csv: t.finish(), json: serde_json::to_value(&r)? })
        }
        Command::GenericFrac { n, k, partition, samples, exact } => {
            let part = partition.partition(*n, *k)?;
            let (samples, hits, lower, upper) = if *exact {
                let (hits, total) = generic_fraction_exact(&part, cap)?;
                let (lo, hi) = wilson_interval(hits, total, 1.959_963_984_540_054)?;
                (total, hits, lo, hi)
            } else {
                let mc = generic_fraction_mc(&part, *samples, seed)?;
                (mc.samples, mc.hits, mc.lower, mc.upper)
            };
            let fraction = hits as f64 / samples as f64;
            let union = union_bound_fraction(&part);
            let base =
                part.log_base.map(|b| serde_json::to_value(b).map(|v| v.as_str().unwrap_or_default().to_string()));
            let base = base.transpose()?.unwrap_or_else(|| "override".into());
            let mut t = Table::new(&[
                "n",
                "k",
                "w",
                "p",
                "log_base",
                "exact",
                "samples",
                "hits",
                "fraction",
                "wilson_lower",
                "wilson_upper",
                "union_bound",
            ]);
            t.row(vec![
                n.to_string(),
                k.to_string(),
                part.w.to_string(),
                part.p.to_string(),
                base.clone(),
                exact.to_string(),
                samples.to_string(),
                hits.to_string(),
                fmt17(fraction),
                fmt17(lower),
                fmt17(upper),
                fmt17(union),
            ]);
            Ok(Output {
                csv: t.finish(),
                json: json!({
                    "partition": part,
                    "exact": exact,
                    "samples": samples,
                    "hits": hits,
                    "fraction": fraction,
                    "wilson_lower": lower,
                    "wilson_upper": upper,
                    "union_bound": union,
                }),
            })
        }
        Command::TgrevVerify { n, k, partition } => {
            let part = partition.partition(*n, *k)?;
            let r = verify_tgrev_product_structure(&part, cap)?;
            let mut t = Table::new(&[
                "n",
                "k",
                "w",
                "p",
                "states",
                "mixture_deviation",
                "block_factor_deviation",
                "remainder_factor_deviation",
                "gap_direct",
                "gap_predicted",
                "gap_deviation",
                "pass",
            ]);
            t.row(vec![
                n.to_string(),
                k.to_string(),
                part.w.to_string(),
                part.p.to_string(),
                r.states.to_string(),
                fmt17(r.mixture_deviation),
                fmt17(r.block_factor_deviation),
                fmt17(r.remainder_factor_deviation),
                fmt17(r.gap_direct),
                fmt17(r.gap_predicted),
                fmt17(r.gap_deviation),
                r.pass.to_string(),
            ]);
            if !r.pass {
                return Err(Error::Invariant(format!("product structure check failed: {r:?}")));
            }
            Ok(Output { csv: t.finish(), json: json!({ "partition": part, "report": r }) })
        }
        Command::Batch { .. } => unreachable!("batches are expanded by the caller"),
    }
}
