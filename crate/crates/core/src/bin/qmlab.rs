use clap::{Parser, Subcommand};
use qmlab::config::ExperimentConfig;
use qmlab::connection::ConnectionForm;
use qmlab::free_qm::{brooks_h, vce_test, FreeWord};
use qmlab::group::{random_reduced_word, FuchsianRep, Word};
use qmlab::hyp2::{triangle_area_quadrature, DiskPoint, GeodesicTriangle};
use qmlab::lie::{self, LieAlgebraElement, LieGroupElement, Target};
use qmlab::qm::{self, Mode, QuasimorphismEngine};
use qmlab::report::RunRecorder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "qmlab", version, about = "Holonomy quasimorphism laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// experiment config file (flat key = value plus [atom] sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// integration tolerance (overrides config)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Evaluate q on the configured words (with scalar oracle for abelian targets)
    Holonomy,
    /// Sample word pairs and measure the defect profile against the curvature bound
    DefectScan,
    /// Homogeneous values: conjugacy decomposition and power-compatibility per word
    Hbg,
    /// Build an epsilon-representation and its doubling-scaling certificate
    Kazhdan,
    /// Heisenberg-target lab: prescribed values, centrality, and lattice rounding
    HeisenbergLab,
    /// Brooks counting functionals and the equivalence separation test
    Brooks,
    /// Gauss-Bonnet vs quadrature area audit on random geodesic triangles
    AreaAudit,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Holonomy => "holonomy",
            Cmd::DefectScan => "defect-scan",
            Cmd::Hbg => "hbg",
            Cmd::Kazhdan => "kazhdan",
            Cmd::HeisenbergLab => "heisenberg-lab",
            Cmd::Brooks => "brooks",
            Cmd::AreaAudit => "area-audit",
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
                let rec = RunRecorder::new(cli.cmd.name(), "", 0, &out);
                rec.finish(Some(format!("config: {e}"))).ok();
                std::process::exit(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    let mut rec = RunRecorder::new(cli.cmd.name(), &cfg.raw, cfg.seed, &cfg.out_dir);
    let result = match cli.cmd {
        Cmd::Holonomy => cmd_holonomy(&cfg, &mut rec),
        Cmd::DefectScan => cmd_defect_scan(&cfg, &mut rec),
        Cmd::Hbg => cmd_hbg(&cfg, &mut rec),
        Cmd::Kazhdan => cmd_kazhdan(&cfg, &mut rec),
        Cmd::HeisenbergLab => cmd_heisenberg_lab(&cfg, &mut rec),
        Cmd::Brooks => cmd_brooks(&cfg, &mut rec),
        Cmd::AreaAudit => cmd_area_audit(&cfg, &mut rec),
    };
    match result {
        Ok(()) => {
            let m = rec.finish(None).expect("manifest write");
            eprintln!(
                "done in {:.2}s; {} artifact(s) in {}",
                m.wall_seconds,
                m.outputs.len(),
                cfg.out_dir.display()
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            rec.finish(Some(e.to_string())).ok();
            std::process::exit(1);
        }
    }
}

fn fmt(x: f64) -> String {
    // shortest round-trip decimal: stable across reruns
    format!("{x:?}")
}

fn build_form(cfg: &ExperimentConfig, rep: Arc<FuchsianRep>) -> Result<ConnectionForm, AnyError> {
    if cfg.atoms.is_empty() {
        Ok(qm::demo_form(rep, cfg.target))
    } else {
        Ok(cfg.build_form(rep)?)
    }
}

/// Configured words followed by seeded random reduced words up to the
/// sampling budget.
fn word_pool(cfg: &ExperimentConfig) -> Result<Vec<Word>, AnyError> {
    let mut words: Vec<Word> = cfg
        .words
        .iter()
        .map(|s| Word::parse(s))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while words.len() < cfg.sample_count {
        let len = rng.gen_range(1..=cfg.sample_len.max(1));
        words.push(random_reduced_word(&mut rng, len));
    }
    Ok(words)
}

fn entry_strings(g: &LieGroupElement) -> Vec<String> {
    g.entries().iter().map(|&x| fmt(x)).collect()
}

fn cmd_holonomy(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let rep = Arc::new(FuchsianRep::standard());
    let form = build_form(cfg, rep)?;
    let engine = QuasimorphismEngine::new(form, Mode::Bg, cfg.tol);
    let words = word_pool(cfg)?;
    rec.stage("setup");

    let dim = engine.identity().entries().len();
    let mut header = vec!["word".to_string()];
    for k in 0..dim {
        header.push(format!("q_{k}"));
    }
    if cfg.target == Target::Abelian {
        for k in 0..dim {
            header.push(format!("oracle_{k}"));
        }
        header.push("oracle_gap".to_string());
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    let mut rows = Vec::with_capacity(words.len());
    let mut max_gap = 0.0f64;
    for w in &words {
        let q = engine.bg_value(w)?;
        let mut row = vec![w.to_string()];
        row.extend(entry_strings(&q));
        if cfg.target == Target::Abelian {
            let oracle = qm::abelian_bg_oracle(engine.form(), w, 600)?;
            let gap = q
                .entries()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            max_gap = max_gap.max(gap);
            row.extend(oracle.iter().map(|&x| fmt(x)));
            row.push(fmt(gap));
        }
        rows.push(row);
    }
    rec.stage("holonomy");
    rec.write_csv("holonomy.csv", &header_refs, &rows)?;
    rec.write_json(
        "summary.json",
        &json!({
            "target": cfg.target.to_string(),
            "words": words.len(),
            "tol": cfg.tol,
            "max_oracle_gap": if cfg.target == Target::Abelian { Some(max_gap) } else { None },
        }),
    )?;
    rec.stage("write");
    Ok(())
}

fn sample_pairs(cfg: &ExperimentConfig, salt: u64) -> Vec<(Word, Word)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    (0..cfg.sample_count.max(1))
        .map(|_| {
            let lx = rng.gen_range(1..=cfg.sample_len.max(1));
            let ly = rng.gen_range(1..=cfg.sample_len.max(1));
            (
                random_reduced_word(&mut rng, lx),
                random_reduced_word(&mut rng, ly),
            )
        })
        .collect()
}

fn cmd_defect_scan(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let rep = Arc::new(FuchsianRep::standard());
    let form = build_form(cfg, rep)?;
    let mode = match cfg.extra.get("mode").map(String::as_str) {
        Some("hbg") => Mode::Hbg,
        _ => Mode::Bg,
    };
    let engine = QuasimorphismEngine::new(form, mode, cfg.tol);
    let pairs = sample_pairs(cfg, 0xDEFEC7);
    rec.stage("setup");

    let report = engine.ulam_defect(&pairs, cfg.seed)?;
    rec.stage("defects");

    let rows: Vec<Vec<String>> = report
        .per_length
        .iter()
        .map(|&(len, max_defect, count)| {
            vec![len.to_string(), fmt(max_defect), count.to_string()]
        })
        .collect();
    rec.write_csv("defect_by_length.csv", &["length", "max_defect", "pairs"], &rows)?;
    let sample_rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                s.x.clone(),
                s.y.clone(),
                s.length.to_string(),
                fmt(s.ulam),
                fmt(s.geometric),
            ]
        })
        .collect();
    rec.write_csv(
        "defect_samples.csv",
        &["x", "y", "length", "ulam", "geometric"],
        &sample_rows,
    )?;
    rec.write_json("summary.json", &report)?;
    rec.stage("write");
    Ok(())
}

fn cmd_hbg(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let rep = Arc::new(FuchsianRep::standard());
    let form = build_form(cfg, rep.clone())?;
    let engine = QuasimorphismEngine::new(form, Mode::Hbg, cfg.tol);
    let words = word_pool(cfg)?;
    let power: u32 = cfg
        .extra
        .get("power")
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(4);
    rec.stage("setup");

    let mut rows = Vec::new();
    for w in &words {
        if w.is_empty() || rep.is_identity(w)? {
            continue;
        }
        let d = rep.decompose(w)?;
        let q = engine.hbg_value(w)?;
        let gap = lie::group_distance(&engine.hbg_value(&w.pow(power as i64))?, &q.pow(power as i64))?;
        let mut row = vec![
            w.to_string(),
            d.root.to_string(),
            d.exponent.to_string(),
        ];
        row.extend(entry_strings(&q));
        row.push(fmt(gap));
        rows.push(row);
    }
    rec.stage("hbg");

    let dim = engine.identity().entries().len();
    let mut header = vec!["word".to_string(), "root".to_string(), "exponent".to_string()];
    for k in 0..dim {
        header.push(format!("q_{k}"));
    }
    header.push(format!("power_gap_n{power}"));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    rec.write_csv("hbg.csv", &header_refs, &rows)?;
    rec.write_json(
        "summary.json",
        &json!({
            "target": cfg.target.to_string(),
            "words": rows.len(),
            "power": power,
            "bound_estimate": engine.bound_estimate(),
            "k4_estimate": engine.k4_estimate(),
        }),
    )?;
    rec.stage("write");
    Ok(())
}

fn cmd_kazhdan(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let rep = Arc::new(FuchsianRep::standard());
    let generators: Vec<Word> = if cfg.words.is_empty() {
        vec![Word::parse("ac")?]
    } else {
        cfg.words
            .iter()
            .map(|s| Word::parse(s))
            .collect::<Result<_, _>>()?
    };
    let b = Word::parse(cfg.extra.get("b").map(String::as_str).unwrap_or("acc"))?;
    let g = match cfg.extra.get("g") {
        Some(s) => {
            let coords: Vec<f64> = s
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()?;
            if coords.len() != 3 {
                return Err("key `g` needs 3 su(2) coordinates".into());
            }
            lie::exp(&LieAlgebraElement::Su2([coords[0], coords[1], coords[2]]))
        }
        None => lie::exp(&LieAlgebraElement::Su2([0.0, 0.0, 0.8 * std::f64::consts::PI])),
    };
    if lie::norm_to_identity(&g) < 1e-9 {
        return Err("target element g must not be the identity".into());
    }
    let m0: u32 = cfg
        .extra
        .get("m0")
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(2);
    let doublings: u32 = cfg
        .extra
        .get("doublings")
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let pairs = sample_pairs(cfg, 0x4A2);
    rec.stage("setup");

    let report = qm::epsilon_scaling(rep, &generators, &b, &g, m0, doublings, &pairs, cfg.tol)?;
    rec.stage("scaling");

    let rows: Vec<Vec<String>> = report
        .scaling
        .iter()
        .map(|&(m, eps)| vec![m.to_string(), fmt(eps)])
        .collect();
    rec.write_csv("scaling.csv", &["m", "epsilon"], &rows)?;
    rec.write_json("certificate.json", &report)?;
    rec.stage("write");
    if !report.vce_certified {
        eprintln!("note: generator/b separation not certified; treating words as independent");
    }
    Ok(())
}

fn cmd_heisenberg_lab(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let rep = Arc::new(FuchsianRep::standard());
    let x_words: Vec<Word> = cfg
        .words
        .iter()
        .map(|s| Word::parse(s))
        .collect::<Result<_, _>>()?;
    // prescribed lattice targets cycle through the two horizontal generators
    let gens = [
        LieGroupElement::Heisenberg([1.0, 0.0, 0.0]),
        LieGroupElement::Heisenberg([0.0, 1.0, 0.0]),
    ];
    let lattice_gens: Vec<LieGroupElement> = (0..x_words.len())
        .map(|i| gens[i % 2].clone())
        .collect();
    let a = Word::parse(cfg.extra.get("a").map(String::as_str).unwrap_or("a"))?;
    let bw = Word::parse(cfg.extra.get("b").map(String::as_str).unwrap_or("c"))?;
    let exponent_pairs: Vec<(i64, i64)> = match cfg.extra.get("pairs") {
        Some(s) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let nums: Vec<i64> = p
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()?;
                if nums.len() != 2 {
                    return Err::<(i64, i64), AnyError>("pairs entries need two integers".into());
                }
                Ok((nums[0], nums[1]))
            })
            .collect::<Result<_, _>>()?,
        None if x_words.is_empty() => Vec::new(),
        None => vec![(1, 1)],
    };
    rec.stage("setup");

    if x_words.is_empty() && exponent_pairs.is_empty() {
        // no prescriptions: the flat connection, q is identically trivial
        let words = word_pool(cfg)?;
        let form = ConnectionForm::new(rep, Target::Heisenberg, 1);
        let engine = QuasimorphismEngine::new(form, Mode::Hbg, cfg.tol);
        let rows: Vec<Vec<String>> = words
            .iter()
            .map(|w| {
                let q = engine.hbg_value(w)?;
                let mut row = vec![w.to_string()];
                row.extend(entry_strings(&q));
                row.push(fmt(lie::norm_to_identity(&q)));
                Ok::<_, AnyError>(row)
            })
            .collect::<Result<_, _>>()?;
        rec.stage("trivial");
        let dim = engine.identity().entries().len();
        let mut header = vec!["word".to_string()];
        for k in 0..dim {
            header.push(format!("q_{k}"));
        }
        header.push("norm".to_string());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        rec.write_csv("values.csv", &header_refs, &rows)?;
        rec.write_json(
            "summary.json",
            &json!({"prescriptions": 0, "all_identity": true, "words": rows.len()}),
        )?;
        rec.stage("write");
        return Ok(());
    }

    let (engine, report) = qm::nonconstructible_lab(
        rep,
        &x_words,
        &lattice_gens,
        &a,
        &bw,
        &exponent_pairs,
        cfg.tol,
    )?;
    rec.stage("lab");

    let residual_rows: Vec<Vec<String>> = x_words
        .iter()
        .zip(&report.residuals)
        .map(|(w, &r)| vec![w.to_string(), fmt(r)])
        .collect();
    rec.write_csv("residuals.csv", &["word", "residual"], &residual_rows)?;
    let growth_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.i.to_string(),
                r.j.to_string(),
                r.word.clone(),
                fmt(r.residual),
                r.central.to_string(),
                fmt(r.fit_r2),
                r.recurrence_exact.to_string(),
            ]
        })
        .collect();
    rec.write_csv(
        "central_growth.csv",
        &["i", "j", "word", "residual", "central", "fit_r2", "recurrence_exact"],
        &growth_rows,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1A77);
    let lattice_words: Vec<Word> = (0..cfg.sample_count.max(1))
        .map(|_| {
            let len = rng.gen_range(1..=cfg.sample_len.max(1));
            random_reduced_word(&mut rng, len)
        })
        .collect();
    let pairs = sample_pairs(cfg, 0x1A78);
    let lattice = engine.lattice_geometric_qm(&lattice_words, &pairs, cfg.seed)?;
    rec.stage("lattice");
    rec.write_json("summary.json", &json!({"lab": report, "lattice": lattice}))?;
    rec.stage("write");
    Ok(())
}

fn cmd_brooks(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let words: Vec<FreeWord> = if cfg.words.is_empty() {
        ["ab", "aabb", "abab"]
            .iter()
            .map(|s| FreeWord::parse(s))
            .collect::<Result<_, _>>()?
    } else {
        cfg.words
            .iter()
            .map(|s| FreeWord::parse(s))
            .collect::<Result<_, _>>()?
    };
    rec.stage("setup");

    let mut h_rows = Vec::new();
    let mut vce_rows = Vec::new();
    for (i, w1) in words.iter().enumerate() {
        for w2 in &words {
            let h = brooks_h(w1, w2)?;
            h_rows.push(vec![w1.to_string(), w2.to_string(), h.to_string()]);
        }
        for w2 in words.iter().skip(i + 1) {
            let cert = vce_test(w1, w2)?;
            vce_rows.push(vec![
                cert.w1.clone(),
                cert.w2.clone(),
                format!("{:?}", cert.verdict),
                cert.values.map(|v| v.to_string()).join(" "),
            ]);
        }
    }
    rec.stage("brooks");
    rec.write_csv("brooks_h.csv", &["counting_word", "argument", "h"], &h_rows)?;
    rec.write_csv(
        "vce.csv",
        &["w1", "w2", "verdict", "h_matrix"],
        &vce_rows,
    )?;
    rec.write_json(
        "summary.json",
        &json!({
            "words": words.len(),
            "not_equivalent_pairs": vce_rows
                .iter()
                .filter(|r| r[2] == "NotEquivalent")
                .count(),
        }),
    )?;
    rec.stage("write");
    Ok(())
}

fn random_triangle(rng: &mut impl Rng, max_r: f64) -> GeodesicTriangle {
    loop {
        let mut vs = [DiskPoint::ORIGIN; 3];
        for v in &mut vs {
            let (x, y) = loop {
                let x: f64 = rng.gen_range(-max_r..max_r);
                let y: f64 = rng.gen_range(-max_r..max_r);
                if x * x + y * y < max_r * max_r {
                    break (x, y);
                }
            };
            *v = DiskPoint::new(x, y).unwrap();
        }
        let t = GeodesicTriangle {
            v0: vs[0],
            v1: vs[1],
            v2: vs[2],
        };
        if !t.is_degenerate() {
            return t;
        }
    }
}

fn cmd_area_audit(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), AnyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_tri = cfg.sample_count.max(1);
    let quad_n = 180;
    rec.stage("setup");

    let mut rows = Vec::with_capacity(n_tri);
    let mut max_area = 0.0f64;
    let mut max_gap = 0.0f64;
    for _ in 0..n_tri {
        let t = random_triangle(&mut rng, 0.92);
        let gb = t.area();
        let quad = triangle_area_quadrature(&t, quad_n);
        let gap = (gb - quad).abs();
        max_area = max_area.max(gb);
        max_gap = max_gap.max(gap);
        rows.push(vec![
            fmt(t.v0.re),
            fmt(t.v0.im),
            fmt(t.v1.re),
            fmt(t.v1.im),
            fmt(t.v2.re),
            fmt(t.v2.im),
            fmt(gb),
            fmt(quad),
            fmt(gap),
        ]);
    }
    // near-ideal triangle: all vertices pushed toward the circle, area -> pi
    let far = GeodesicTriangle {
        v0: DiskPoint::new(0.999999, 0.0)?,
        v1: DiskPoint::new(-0.4999995, 0.8660254)?,
        v2: DiskPoint::new(-0.4999995, -0.8660254)?,
    };
    let far_area = far.area();
    rec.stage("audit");

    rec.write_csv(
        "areas.csv",
        &[
            "v0x", "v0y", "v1x", "v1y", "v2x", "v2y", "area_gb", "area_quad", "gap",
        ],
        &rows,
    )?;
    rec.write_json(
        "summary.json",
        &json!({
            "triangles": n_tri,
            "quadrature_n": quad_n,
            "max_area": max_area,
            "max_quadrature_gap": max_gap,
            "area_bound_pi": std::f64::consts::PI,
            "near_ideal_area": far_area,
            "near_ideal_gap_to_pi": (std::f64::consts::PI - far_area).abs(),
        }),
    )?;
    rec.stage("write");
    Ok(())
}
