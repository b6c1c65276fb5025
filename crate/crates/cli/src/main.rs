//! `spherebispec` command-line tool. Every subcommand is a thin adapter over
//! library calls; files are written atomically.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spherebispec::diagrams::{moment_bruteforce, paired_family_value, MAX_ORACLE_L};
use spherebispec::estimators::{
    estimate_cl_all, moment_I, moment_Ihat, ordinates_to_csv, write_ordinates, BispectrumEstimator, BispectrumKind,
    BispectrumOrdinate, Exactness, PowerSpectrum,
};
use spherebispec::gaussianity::{required_ordinates, run_test, Statistic, TestConfig};
use spherebispec::harness::{
    make_nongaussian_alm, replication_rng, run_study, sample_gaussian_alm, NonGaussianConfig, SpectrumKind,
    SpectrumModel, StudyManifest,
};
use spherebispec::sht::{analyze, synthesize, GridSpec, HarmonicCoefficients, SphereGrid};
use spherebispec::wigner::exact::{wigner_3j_exact, wigner_6j_exact};
use spherebispec::wigner::{wigner_3j, wigner_6j, SixJArguments, TripleLM};
use spherebispec::{write_atomic, Error};

const LMIN_HELP: &str = "Lowest multipole kept; the default 1 drops the monopole and keeps the dipole";

#[derive(Parser, Debug)]
#[command(name = "spherebispec", version, about = "Spherical bispectra, Gaussianity tests and Monte Carlo studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a Wigner 3j or 6j symbol.
    Wigner(WignerArgs),
    /// Simulate harmonic coefficients, optionally with quadratic non-Gaussianity, and their map.
    Synth(SynthArgs),
    /// Harmonic coefficients of a sampled map.
    Analyze(AnalyzeArgs),
    /// Sample power spectrum of harmonic coefficients.
    Spectrum(SpectrumArgs),
    /// Bispectrum ordinates of harmonic coefficients.
    Bispectrum(BispectrumArgs),
    /// Run one J-process Gaussianity test.
    Test(TestArgs),
    /// Gaussian moments of the normalized bispectrum: brute force against closed form.
    Oracle(OracleArgs),
    /// Run a Monte Carlo size or power study from a manifest.
    Study(StudyArgs),
}

#[derive(Args, Debug)]
struct WignerArgs {
    /// 3j symbol (l1 l2 l3; m1 m2 m3).
    #[arg(long = "3j", num_args = 6, value_names = ["L1", "L2", "L3", "M1", "M2", "M3"], allow_negative_numbers = true, conflicts_with = "six_j", required_unless_present = "six_j")]
    three_j: Option<Vec<i32>>,
    /// 6j symbol {a b c; d e f}.
    #[arg(long = "6j", num_args = 6, value_names = ["A", "B", "C", "D", "E", "F"])]
    six_j: Option<Vec<i32>>,
    /// Use the exact rational evaluation and also print sign and square.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct SpectrumModelArgs {
    /// Spectrum shape: power_law (C_l = A l^-alpha) or sw (C_l = A / l(l+1)).
    #[arg(long, default_value = "power_law")]
    spectrum: SpectrumKind,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Amplitude A; when omitted it is solved so Var T equals --variance-target.
    #[arg(long)]
    amp: Option<f64>,
    #[arg(long = "variance-target", default_value_t = 1e-8)]
    variance_target: f64,
}

impl SpectrumModelArgs {
    fn model(&self, l_min: usize, l_max: usize) -> spherebispec::Result<SpectrumModel> {
        let base = SpectrumModel::new(self.spectrum, self.amp.unwrap_or(1.0), self.alpha)?;
        match self.amp {
            Some(_) => Ok(base),
            None => base.with_variance(l_min, l_max, self.variance_target),
        }
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Band limit.
    #[arg(long = "L")]
    l_max: usize,
    #[arg(long, default_value_t = 1, help = LMIN_HELP)]
    lmin: usize,
    #[command(flatten)]
    model: SpectrumModelArgs,
    /// Nonlinearity parameter of T + fnl (T^2 - E T^2).
    #[arg(long, default_value_t = 0.0)]
    fnl: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV of harmonic coefficients.
    #[arg(long)]
    out: PathBuf,
    /// Also write the synthesized map here.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Input map CSV.
    #[arg(long)]
    map: PathBuf,
    /// Analysis band limit.
    #[arg(long = "L")]
    l_max: usize,
    #[arg(long, default_value_t = 1, help = LMIN_HELP)]
    lmin: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    alm: PathBuf,
    /// Output CSV `l,cl`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BispectrumArgs {
    #[arg(long)]
    alm: PathBuf,
    /// Quantity: B (raw), I (known spectrum, needs --cl) or Ihat.
    #[arg(long, default_value = "Ihat")]
    kind: BispectrumKind,
    /// Known spectrum CSV `l,cl`, for --kind I.
    #[arg(long)]
    cl: Option<PathBuf>,
    /// One ordinate; repeat for several.
    #[arg(long, num_args = 3, value_names = ["L1", "L2", "L3"], action = clap::ArgAction::Append)]
    triple: Vec<usize>,
    /// Instead of --triple, every ordinate this statistic needs (with --L, --l0, --K).
    #[arg(long)]
    stat: Option<Statistic>,
    #[arg(long = "L")]
    l_max: Option<usize>,
    #[arg(long, default_value_t = 2)]
    l0: usize,
    #[arg(long = "K", default_value_t = 0)]
    k: usize,
    /// Output CSV `l1,l2,l3,kind,value`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[arg(long)]
    stat: Statistic,
    #[arg(long = "L")]
    l_max: usize,
    #[arg(long, default_value_t = 2)]
    l0: usize,
    #[arg(long = "K", default_value_t = 0)]
    k: usize,
    #[arg(long)]
    alm: PathBuf,
    /// Write the path as CSV `r,value`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the result JSON here as well as to stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(num_args = 3, value_names = ["L1", "L2", "L3"], required = true)]
    triple: Vec<usize>,
    /// Half the moment order: 1 for E I^2, 2 for E I^4.
    #[arg(long, default_value_t = 2)]
    p: usize,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Master seed; required here or in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the manifest replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Report CSV; a JSON sidecar is written next to it. Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric_guard() { 2 } else { 1 })
        }
    }
}

fn dispatch(cmd: Command) -> spherebispec::Result<()> {
    match cmd {
        Command::Wigner(a) => wigner(a),
        Command::Synth(a) => synth(a),
        Command::Analyze(a) => {
            let grid = SphereGrid::read_csv(&a.map)?;
            analyze(&grid, a.l_max, a.lmin)?.write_csv(&a.out)
        }
        Command::Spectrum(a) => {
            let alm = HarmonicCoefficients::read_csv(&a.alm)?;
            // sample spectra may vanish, so this bypasses the positivity check of PowerSpectrum
            let mut text = String::from("l,cl\n");
            for (k, c) in estimate_cl_all(&alm).iter().enumerate() {
                text.push_str(&format!("{},{c:e}\n", alm.l_min() + k));
            }
            emit(a.out.as_deref(), &text)
        }
        Command::Bispectrum(a) => bispectrum(a),
        Command::Test(a) => test(a),
        Command::Oracle(a) => oracle(a),
        Command::Study(a) => study(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> spherebispec::Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn wigner(a: WignerArgs) -> spherebispec::Result<()> {
    if let Some(v) = a.three_j {
        let t = TripleLM::new(v[0], v[1], v[2], v[3], v[4], v[5]);
        if a.exact {
            let x = wigner_3j_exact(&t)?;
            println!("{}", x.to_f64());
            println!("sign = {}, square = {}", x.sign, x.square);
        } else {
            println!("{}", wigner_3j(&t)?);
        }
    } else if let Some(v) = a.six_j {
        let s = SixJArguments::new(v[0], v[1], v[2], v[3], v[4], v[5]);
        if a.exact {
            let x = wigner_6j_exact(&s);
            println!("{}", x.to_f64());
            println!("sign = {}, square = {}", x.sign, x.square);
        } else {
            println!("{}", wigner_6j(&s));
        }
    }
    Ok(())
}

fn synth(a: SynthArgs) -> spherebispec::Result<()> {
    let model = a.model.model(a.lmin, a.l_max)?;
    let mut rng = replication_rng(a.seed, a.l_max, 0);
    let mut alm = sample_gaussian_alm(&model, a.lmin, a.l_max, &mut rng)?;
    if a.fnl != 0.0 {
        let cfg = NonGaussianConfig { f_nl: a.fnl, variance_target: a.model.variance_target, ..NonGaussianConfig::new(a.fnl) };
        alm = make_nongaussian_alm(&alm, &cfg, a.l_max)?;
    }
    alm.write_csv(&a.out)?;
    if let Some(p) = a.map {
        synthesize(&alm, &GridSpec::new(a.l_max))?.write_csv(&p)?;
    }
    Ok(())
}

fn bispectrum(a: BispectrumArgs) -> spherebispec::Result<()> {
    let alm = HarmonicCoefficients::read_csv(&a.alm)?;
    let cl = a.cl.as_deref().map(PowerSpectrum::read_csv).transpose()?;
    let triples: Vec<[usize; 3]> = match a.stat {
        Some(s) => {
            let l_max = a.l_max.unwrap_or(alm.band_limit());
            required_ordinates(&TestConfig::new(s, l_max, a.l0, a.k)?)
        }
        None if a.triple.is_empty() => {
            return Err(Error::Invalid("give at least one --triple or a --stat".into()));
        }
        None => a.triple.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
    };
    let mut est = BispectrumEstimator::new(&alm);
    let rows = triples
        .iter()
        .map(|t| {
            let v = est.evaluate(t[0], t[1], t[2], a.kind, cl.as_ref())?;
            BispectrumOrdinate::new(t[0], t[1], t[2], a.kind, v)
        })
        .collect::<spherebispec::Result<Vec<_>>>()?;
    match a.out {
        Some(p) => write_ordinates(&p, &rows),
        None => emit(None, &ordinates_to_csv(&rows)),
    }
}

fn test(a: TestArgs) -> spherebispec::Result<()> {
    let cfg = TestConfig::new(a.stat, a.l_max, a.l0, a.k)?;
    let alm = HarmonicCoefficients::read_csv(&a.alm)?;
    let path = run_test(&cfg, &alm)?;
    if let Some(p) = a.out {
        path.write_csv(&p)?;
    }
    if let Some(p) = a.json {
        path.write_json(&p)?;
    }
    print!("{}", path.to_json());
    Ok(())
}

fn oracle(a: OracleArgs) -> spherebispec::Result<()> {
    let mut t = [a.triple[0], a.triple[1], a.triple[2]];
    t.sort_unstable();
    if t[2] > MAX_ORACLE_L {
        return Err(Error::ResourceGuard(format!("the diagram oracle covers multipoles up to {MAX_ORACLE_L}")));
    }
    let brute = moment_bruteforce(a.p, t[0], t[1], t[2])?;
    let paired = paired_family_value(a.p, t[0], t[1], t[2])?;
    let closed = moment_I(t[0], t[1], t[2], a.p)?;
    let hat = moment_Ihat(t[0], t[1], t[2], a.p)?;
    let v = serde_json::json!({
        "l": t,
        "p": a.p,
        "bruteforce": brute,
        "paired": paired,
        "remainder": brute - paired,
        "closed_form": closed.value,
        "closed_form_exact": closed.exactness == Exactness::Exact,
        "hat_moment": hat.value,
    });
    println!("{}", serde_json::to_string_pretty(&v).expect("plain JSON values"));
    Ok(())
}

fn study(a: StudyArgs) -> spherebispec::Result<()> {
    let mut m = StudyManifest::read(&a.manifest)?;
    if let Some(s) = a.seed {
        m.seed = Some(s);
    }
    if let Some(r) = a.reps {
        m.reps = r;
    }
    if m.seed.is_none() {
        return Err(Error::Invalid("study needs --seed (or `seed =` in the manifest)".into()));
    }
    let report = run_study(&m, None)?;
    match a.out {
        Some(p) => {
            report.write(&p)?;
            Ok(())
        }
        None => emit(None, &report.to_csv()),
    }
}
