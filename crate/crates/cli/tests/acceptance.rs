//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails (including its runtime budget).

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use entropix_cli::artifacts::entropy_pixel;
use entropix_cli::{execute, Mode, RunConfig};
use entropix_core::dist::{gumbel_noise, validate_probs};
use entropix_core::mask::confidence;
use entropix_core::scale::scale_factor;
use entropix_core::speculative::entropy_threshold;
use entropix_core::temperature::{shape_distribution, PRESETS};
use entropix_core::{
    cosine_schedule, dynamic_temperature, entropy, jacobi_decode, mask_generate, profile_rect,
    scale_temperature, update_mask, Grid, MaskState, OracleConfig, Rect, RngStream, SamplerConfig,
    ScaleTempParams, SpecAcceptParams, ToyOracle,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

/// Direct summation of −p ln p, skipping zeros, with Kahan compensation.
fn entropy_oracle(p: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in p {
        if x > 0.0 {
            let y = -x * x.ln() - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
    }
    sum
}

fn random_distribution(v: usize, kind: usize, rng: &mut RngStream) -> Vec<f64> {
    let w: Vec<f64> = (0..v)
        .map(|_| {
            let u = rng.uniform();
            match kind % 4 {
                0 => u,
                // peaked: exponentiated wide logits
                1 => (20.0 * u).exp(),
                // sparse: about half the entries zero
                2 => {
                    if rng.uniform() < 0.5 {
                        0.0
                    } else {
                        u
                    }
                }
                _ => u.powi(8),
            }
        })
        .collect();
    let mut w = w;
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn c1_entropy_oracle() -> Check {
    let mut rng = RngStream::new(1, 1);
    let mut worst = 0.0f64;
    let mut n = 0;
    for v in [2usize, 8, 64, 16384] {
        for i in 0..1000 {
            let p = random_distribution(v, i, &mut rng);
            validate_probs(&p).map_err(e)?;
            let h = entropy(&p).map_err(e)?;
            let o = entropy_oracle(&p);
            worst = worst.max((h - o).abs());
            ensure(
                h >= 0.0 && h <= (v as f64).ln(),
                format!("V={v}: ε={h} outside [0, ln V]"),
            )?;
            n += 1;
        }
    }
    ensure(worst <= 1e-12, format!("max |ε − oracle| = {worst:e}"))?;
    Ok(format!("{n} distributions, max |ε − oracle| = {worst:.2e}"))
}

fn c2_temperature() -> Check {
    let mut rng = RngStream::new(2, 2);
    for &(name, t0, alpha, theta) in PRESETS.iter() {
        let tp = &entropix_core::preset(name).map_err(e)?;
        ensure(
            (tp.t0(), tp.alpha(), tp.theta()) == (t0, alpha, theta),
            name,
        )?;
        for _ in 0..1000 {
            let (a, b) = (rng.uniform() * 20.0, rng.uniform() * 20.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo == hi {
                continue;
            }
            let (tl, th) = (
                dynamic_temperature(lo, tp).map_err(e)?,
                dynamic_temperature(hi, tp).map_err(e)?,
            );
            ensure(tl > th, format!("{name}: T({lo}) = {tl} ≤ T({hi}) = {th}"))?;
        }
        let t0 = dynamic_temperature(0.0, tp).map_err(e)?;
        ensure(
            (t0 - (tp.t0() + tp.theta())).abs() <= 1e-12,
            format!("{name}: T(0) = {t0}"),
        )?;
        let t50 = dynamic_temperature(50.0, tp).map_err(e)?;
        ensure(
            t50 - tp.theta() < 1e-6,
            format!("{name}: T(50) − θ = {}", t50 - tp.theta()),
        )?;
    }
    Ok(format!(
        "{} presets × 1000 pairs strictly decreasing",
        PRESETS.len()
    ))
}

fn c3_speculative_preservation() -> Check {
    // Stationary oracle: each position's distribution ignores the prefix, so
    // the pooled emitted tokens should follow the average target.
    let (rows, cols, vocab) = (4, 4, 8);
    let profile = Grid::from_vec(
        rows,
        cols,
        (0..16).map(|i| [0.0, 0.05, 0.1, 0.15][i % 4]).collect(),
    )
    .map_err(e)?;
    let mut oc = OracleConfig::new(profile, 33);
    oc.vocab = vocab;
    oc.context_sensitivity = 0.0;
    let oracle = ToyOracle::new(oc).map_err(e)?;
    let cfg = SamplerConfig::new(entropix_core::preset("llamagen").map_err(e)?);

    let mut target = vec![0.0; vocab];
    for r in 0..rows {
        for c in 0..cols {
            let shaped = shape_distribution(&oracle.logits_at(&[], r, c).map_err(e)?, None, &cfg)
                .map_err(e)?;
            for (t, p) in target.iter_mut().zip(&shaped.probs) {
                *t += p / 16.0;
            }
        }
    }

    let runs = 6250;
    let sp = SpecAcceptParams::baseline();
    let mut counts = vec![0usize; vocab];
    let mut verified = 0;
    for seed in 0..runs {
        let out = jacobi_decode(
            &oracle,
            (rows, cols),
            16,
            4,
            &cfg,
            &sp,
            &RngStream::new(seed, 0),
        )
        .map_err(e)?;
        verified += out.stats.drafts_verified;
        for t in out.tokens {
            counts[t as usize] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    ensure(n == 100_000, format!("emitted {n} tokens"))?;
    let tv = counts
        .iter()
        .zip(&target)
        .map(|(&c, &q)| (c as f64 / n as f64 - q).abs())
        .sum::<f64>()
        / 2.0;
    ensure(tv < 0.01, format!("TV = {tv}"))?;
    Ok(format!(
        "{n} tokens ({verified} verified drafts), TV = {tv:.4}"
    ))
}

fn c4_gumbel() -> Check {
    let p = [0.3, 0.2, 0.15, 0.12, 0.1, 0.07, 0.04, 0.02];
    let state = MaskState::new(1, 8, 1, 99);
    let cand = Grid::from_vec(1, 8, (0..8).collect()).map_err(e)?;
    let mut rng = RngStream::new(4, 4);
    let trials = 100_000;
    let mut counts = [0usize; 8];
    for _ in 0..trials {
        let conf: Vec<f64> = p
            .iter()
            .map(|&q| confidence(q, 1.0, &mut rng))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let next =
            update_mask(&Grid::from_vec(1, 8, conf).map_err(e)?, &cand, &state, 1).map_err(e)?;
        let picked = (0..8)
            .find(|&i| next.accepted[i])
            .ok_or("nothing accepted")?;
        counts[picked] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&p)
        .map(|(&c, &q)| {
            let ex = q * trials as f64;
            (c as f64 - ex).powi(2) / ex
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(7.0).map_err(e)?.cdf(chi2);
    ensure(p_value > 0.01, format!("χ² = {chi2}, p = {p_value}"))?;

    let mut g = RngStream::new(40, 0);
    let draws = 1_000_000;
    let mean = (0..draws).map(|_| gumbel_noise(&mut g)).sum::<f64>() / draws as f64;
    ensure((mean - 0.5772).abs() <= 0.01, format!("Gumbel mean {mean}"))?;
    Ok(format!(
        "χ² = {chi2:.2}, p = {p_value:.3}; Gumbel mean = {mean:.4}"
    ))
}

fn c5_mask_coverage() -> Check {
    let prof = profile_rect((16, 16), 0.9, 0.1, Rect::centered(16, 16, 8, 8)).map_err(e)?;
    let cfg = SamplerConfig::new(entropix_core::preset("meissonic").map_err(e)?);
    let mut runs = 0;
    for seed in 0..50u64 {
        let oracle = ToyOracle::new(OracleConfig::new(prof.clone(), seed)).map_err(e)?;
        for steps in [8, 16, 64] {
            let sched = cosine_schedule(256, steps).map_err(e)?;
            ensure(sched.counts().iter().sum::<usize>() == 256, "Σ k_t ≠ 256")?;
            let out = mask_generate(&oracle, (16, 16), &sched, &cfg, &RngStream::new(seed, 0))
                .map_err(e)?;
            let mut times = [0usize; 256];
            let mut prev = MaskState::new(16, 16, steps, 64);
            for st in &out.history {
                for i in 0..256 {
                    if prev.accepted[i] {
                        ensure(st.accepted[i], format!("seed {seed}: cell {i} un-accepted"))?;
                        ensure(
                            st.tokens[i] == prev.tokens[i],
                            format!("seed {seed}: cell {i} mutated"),
                        )?;
                    } else if st.accepted[i] {
                        times[i] += 1;
                    }
                }
                prev = st.clone();
            }
            ensure(
                times.iter().all(|&t| t == 1),
                format!("seed {seed}, {steps} steps: a cell was not accepted exactly once"),
            )?;
            ensure(
                prev.tokens == out.tokens,
                "final grid differs from last state",
            )?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, every cell accepted exactly once"))
}

fn c6_directional_steps() -> Check {
    let base = RunConfig::default();
    let profile = base.oracle().map_err(e)?.profile;
    let low = profile.as_slice().iter().filter(|&&k| k >= 0.8).count() as f64 / 256.0;
    ensure(
        low >= 0.7,
        format!("only {:.0}% of cells at κ ≥ 0.8", low * 100.0),
    )?;
    let (mut inv_b, mut inv_e, mut diff) = (0usize, 0usize, 0.0);
    for seed in 0..20 {
        let mut b = base.clone();
        b.seed = seed;
        b.mode = Mode::SpecBaseline;
        let mut en = b.clone();
        en.mode = Mode::SpecEntropy;
        let (rb, re) = (execute(&b).map_err(e)?, execute(&en).map_err(e)?);
        inv_b += rb.model_invocations;
        inv_e += re.model_invocations;
        let differing = rb
            .tokens
            .as_slice()
            .iter()
            .zip(re.tokens.as_slice())
            .filter(|(x, y)| x != y)
            .count();
        diff += differing as f64 / 256.0 / 20.0;
    }
    let reduction = 1.0 - inv_e as f64 / inv_b as f64;
    let detail = format!(
        "invocations {:.2} → {:.2} per run ({:.1}% fewer), tokens differ at {:.1}%",
        inv_b as f64 / 20.0,
        inv_e as f64 / 20.0,
        reduction * 100.0,
        diff * 100.0
    );
    ensure(reduction >= 0.10 && diff < 0.25, detail.clone())?;
    Ok(detail)
}

fn c7_threshold() -> Check {
    let sp = SpecAcceptParams::default();
    ensure(entropy_threshold(0.0, 0.5, &sp) == 0.0, "threshold(0) ≠ 0")?;
    let ts: Vec<f64> = (0..100)
        .map(|i| entropy_threshold(16.0 * i as f64 / 99.0, 0.5, &sp))
        .collect();
    ensure(
        ts.windows(2).all(|w| w[0] <= w[1]),
        format!("not monotone: {ts:?}"),
    )?;
    Ok(format!("100 points, threshold(16) = {}", ts[99]))
}

fn c8_scale_decay() -> Check {
    let sp = ScaleTempParams::new(0.3, 15).map_err(e)?;
    // 1 − 0.3 (s − 7) by hand for s = 1..10; s ≥ 11 is at or below zero
    let expected = [2.8, 2.5, 2.2, 1.9, 1.6, 1.3, 1.0, 0.7, 0.4, 0.1];
    for s in 1..=15 {
        let t = scale_temperature(1.0, s, &sp).map_err(e)?;
        ensure(t > 0.0, format!("s={s}: T = {t}"))?;
        if s <= 10 {
            ensure(
                (t - expected[s - 1]).abs() < 1e-12,
                format!("s={s}: {t} vs {}", expected[s - 1]),
            )?;
        } else {
            ensure(
                scale_factor(s, &sp) <= 0.0,
                format!("s={s}: factor positive"),
            )?;
            ensure(
                t == sp.floor_temperature(),
                format!("s={s}: clamp not engaged"),
            )?;
        }
    }
    Ok("s=7 → 1.0, s=8 → 0.7, clamped to 0.05 for s ≥ 11".into())
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_entropix"))
        .args(args)
        .env_remove("ENTROPIX_SEED")
        .current_dir(dir)
        .output()
        .map_err(e)?;
    ensure(
        out.status.success(),
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn c9_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(e)?;
    let modes = [
        "next-token",
        "mask",
        "scale",
        "spec-baseline",
        "spec-entropy",
    ];
    for mode in modes {
        let cfg = format!("{mode}.cfg");
        fs::write(tmp.path().join(&cfg), format!("mode = {mode}\nseed = 9\n")).map_err(e)?;
        for run in ["1", "2"] {
            run_cli(
                tmp.path(),
                &["generate", &cfg, "-o", &format!("{mode}-{run}")],
            )?;
        }
        for f in ["tokens.csv", "entropy.pgm", "report.csv"] {
            let a = fs::read(tmp.path().join(format!("{mode}-1")).join(f)).map_err(e)?;
            let b = fs::read(tmp.path().join(format!("{mode}-2")).join(f)).map_err(e)?;
            ensure(a == b, format!("{mode}: {f} differs between runs"))?;
        }
    }
    Ok(format!("{} modes byte-identical", modes.len()))
}

/// Minimal plain-PGM reader: magic, width, height, maxval, then samples;
/// `#` comments run to end of line.
fn parse_pgm(text: &str) -> Result<(usize, usize, u32, Vec<u32>), String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or(format!("missing {what}"));
    ensure(next("magic")? == "P2", "not a plain PGM")?;
    let w: usize = next("width")?.parse().map_err(e)?;
    let h: usize = next("height")?.parse().map_err(e)?;
    let max: u32 = next("maxval")?.parse().map_err(e)?;
    let mut px = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        let v: u32 = next("sample")?.parse().map_err(e)?;
        ensure(v <= max, format!("sample {v} > maxval {max}"))?;
        px.push(v);
    }
    ensure(tokens.next().is_none(), "trailing data after raster")?;
    Ok((w, h, max, px))
}

fn c10_entropy_map() -> Check {
    let tmp = tempfile::tempdir().map_err(e)?;
    fs::write(tmp.path().join("map.cfg"), "seed = 10\nvocab = 64\n").map_err(e)?;
    run_cli(tmp.path(), &["entropy-map", "map.cfg"])?;
    let dir = tmp.path().join("out");

    let csv = fs::read_to_string(dir.join("entropy.csv")).map_err(e)?;
    let eps: Vec<f64> = csv
        .lines()
        .skip(1)
        .flat_map(|l| {
            l.split(',')
                .map(|x| x.parse::<f64>().map_err(e))
                .collect::<Vec<_>>()
        })
        .collect::<Result<_, _>>()?;
    ensure(eps.len() == 256, format!("{} entropy values", eps.len()))?;
    let rect = Rect::centered(16, 16, 8, 8);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (i, &x) in eps.iter().enumerate() {
        if rect.contains(i / 16, i % 16) {
            inside.push(x);
        } else {
            outside.push(x);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = mean(&inside) - mean(&outside);
    ensure(gap >= 2.0, format!("inside − outside = {gap} nats"))?;

    let (w, h, max, px) = parse_pgm(&fs::read_to_string(dir.join("entropy.pgm")).map_err(e)?)?;
    ensure(
        (w, h, max) == (16, 16, 255),
        format!("header {w}x{h} max {max}"),
    )?;
    for (p, &x) in px.iter().zip(&eps) {
        ensure(
            *p == entropy_pixel(x, 64) as u32,
            format!("pixel {p} vs ε {x}"),
        )?;
    }
    Ok(format!(
        "inside − outside = {gap:.3} nats; PGM 16x16 round-trips"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("entropy oracle", Duration::from_secs(1), c1_entropy_oracle),
        (
            "temperature mapping",
            Duration::from_secs(1),
            c2_temperature,
        ),
        (
            "speculative correctness (baseline)",
            Duration::from_secs(30),
            c3_speculative_preservation,
        ),
        ("Gumbel-max", Duration::from_secs(30), c4_gumbel),
        ("mask coverage", Duration::from_secs(10), c5_mask_coverage),
        (
            "directional step reduction",
            Duration::from_secs(60),
            c6_directional_steps,
        ),
        (
            "entropy-threshold monotonicity",
            Duration::from_secs(1),
            c7_threshold,
        ),
        ("scale decay", Duration::from_secs(1), c8_scale_decay),
        (
            "end-to-end determinism",
            Duration::from_secs(30),
            c9_determinism,
        ),
        (
            "entropy-map reproduction",
            Duration::from_secs(5),
            c10_entropy_map,
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let verdict = match (&result, took <= *budget) {
            (Ok(_), true) => "PASS",
            _ => "FAIL",
        };
        let detail = match &result {
            Ok(d) => d.clone(),
            Err(d) => d.clone(),
        };
        let timing = if took <= *budget {
            format!("{:.2}s", took.as_secs_f64())
        } else {
            format!(
                "{:.2}s exceeds {}s budget",
                took.as_secs_f64(),
                budget.as_secs()
            )
        };
        println!(
            "criterion {:>2} {verdict} {name}: {detail} [{timing}]",
            i + 1
        );
        if verdict == "FAIL" {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
