//! Run configuration, the verification suites, and their JSON/CSV reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cocycles::{commutator_tr_prime, fedosov_integral, fedosov_step_check, stokes_chain, symbol_residuals, CocycleReport, SymbolAlgebra};
use crate::equivariant::{
    dilation_trace_defect, crossed_residuals, trace_formula_check, BoundaryForm, CrossedAlgebra, CrossedElement, GroupDescriptor,
    GroupElement,
};
use crate::error::{BdmError, Result};
use crate::generate::{generate_descriptor, GeneratorProfile, Profile, SymbolDescriptor};
use crate::grid::GridSet;
use crate::pairing::{boundary_family, calibrate_on, interior_family, pairing_report, ClassDescriptor};
use crate::symbol::FullSymbol;

/// Version stamp carried by every report.
pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("BDM_GIT_REV"));

pub const CSV_HEADER: &str = "suite,tuple_id,residual_name,value,grid_n_x1,grid_n_theta,hardy_N,tolerance,pass";

/// Dilations checked by the trace suite.
pub const TRACE_DILATIONS: [f64; 4] = [0.25, 0.5, 2.0, 4.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    VerifyCocycle,
    VerifyTrace,
    VerifyEquivariant,
    PairIndex,
    Sweep,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::VerifyCocycle => "verify-cocycle",
            Suite::VerifyTrace => "verify-trace",
            Suite::VerifyEquivariant => "verify-equivariant",
            Suite::PairIndex => "pair-index",
            Suite::Sweep => "sweep",
        }
    }

    fn default_tuples(self) -> usize {
        match self {
            Suite::VerifyCocycle | Suite::VerifyTrace => 20,
            Suite::VerifyEquivariant | Suite::Sweep => 3,
            Suite::PairIndex => 0,
        }
    }
}

/// Weight of `Bφ3` in the mixed relation. `Literal` uses `i/4π`; `Consistent` uses
/// `i/12π`, the value compatible with `B = N B0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Literal,
    Consistent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// One summand `a·δ_γ` of a crossed element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossedTerm {
    #[serde(default)]
    pub group: GroupDescriptor,
    pub symbol: SymbolDescriptor,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generators {
    /// Number of random tuples; the default depends on the suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<GeneratorProfile>,
    /// Explicit symbol tuples, used instead of random ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<Vec<SymbolDescriptor>>,
    /// Group elements for the equivariant suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupDescriptor>,
    /// Explicit crossed-element tuples, used instead of random ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crossed: Vec<Vec<Vec<CrossedTerm>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<ClassDescriptor>,
    /// Grid levels of the sweep suite, the base grid included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_levels: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub suite: Suite,
    #[serde(default)]
    pub grids: GridSet,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub generators: Generators,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_tolerance() -> f64 {
    1e-5
}

impl RunConfig {
    pub fn new(suite: Suite) -> Self {
        RunConfig {
            suite,
            grids: GridSet::default(),
            tolerance: default_tolerance(),
            seed: 0,
            convention: Convention::Literal,
            generators: Generators::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    /// A zero tolerance is accepted (every nonzero residual then fails).
    pub fn validate(&self) -> Result<()> {
        self.grids.validate()?;
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(BdmError::Config(format!("tolerance must be finite and non-negative, got {}", self.tolerance)));
        }
        if let Some(levels) = self.generators.sweep_levels {
            if levels < 2 {
                return Err(BdmError::Config("a sweep needs at least 2 levels".into()));
            }
        }
        let arity = if self.suite == Suite::VerifyTrace { 3 } else { 5 };
        for t in &self.generators.symbols {
            if t.len() < arity {
                return Err(BdmError::Config(format!("symbol tuples need {arity} entries, got {}", t.len())));
            }
        }
        for t in &self.generators.crossed {
            if t.len() < 5 || t.iter().any(|slot| slot.is_empty()) {
                return Err(BdmError::Config("crossed tuples need 5 non-empty slots".into()));
            }
        }
        for g in &self.generators.groups {
            GroupElement::from_descriptor(g)?;
        }
        for c in &self.generators.classes {
            c.validate()?;
        }
        Ok(())
    }

    fn tuples(&self) -> usize {
        self.generators.tuples.unwrap_or(self.suite.default_tuples())
    }

    fn profile(&self) -> GeneratorProfile {
        self.generators.profile.clone().unwrap_or_else(|| match self.suite {
            // room for the support to double under a dilation
            Suite::VerifyEquivariant => GeneratorProfile {
                profile: Profile { flat: 0.0, support: 0.45 },
                ..Default::default()
            },
            _ => GeneratorProfile::default(),
        })
    }

    fn groups(&self) -> Result<Vec<GroupElement>> {
        if self.generators.groups.is_empty() {
            return Ok(vec![
                GroupElement::rotation(1, 8)?,
                GroupElement::dilation(2.0)?,
                GroupElement::rotation(1, 8)?.compose(&GroupElement::dilation(2.0)?),
            ]);
        }
        self.generators.groups.iter().map(GroupElement::from_descriptor).collect()
    }

    /// The same run restricted to one tuple.
    fn replay_with(&self, generators: Generators) -> RunConfig {
        RunConfig {
            generators: Generators {
                profile: self.generators.profile.clone(),
                sweep_levels: self.generators.sweep_levels,
                ..generators
            },
            output: OutputSpec::default(),
            ..self.clone()
        }
    }
}

/// One line of the CSV table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub suite: String,
    pub tuple_id: String,
    pub residual_name: String,
    pub value: f64,
    pub grid_n_x1: usize,
    pub grid_n_theta: usize,
    pub hardy_n: usize,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub artifact_version: String,
    pub suite: Suite,
    pub convention: Convention,
    pub seed: u64,
    pub tolerance: f64,
    pub grid: GridSet,
    pub pass: bool,
    pub rows: Vec<ResidualRow>,
    /// Suite-specific records, one per tuple or class.
    pub records: Vec<Value>,
    pub failing: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{},{},{:e},{}",
                r.suite, r.tuple_id, r.residual_name, r.value, r.grid_n_x1, r.grid_n_theta, r.hardy_n, r.tolerance, r.pass
            );
        }
        s
    }
}

/// A finished run: the report and a replay configuration per failing tuple.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub report: Report,
    pub replays: Vec<(String, RunConfig)>,
}

impl SuiteOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }

    /// Writes the report to `out` and each replay to `<out>.replay/<tuple_id>.json`.
    pub fn write(&self, out: &Path, format: Format) -> Result<Vec<PathBuf>> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = match format {
            Format::Json => self.report.to_json(),
            Format::Csv => self.report.to_csv(),
        };
        std::fs::write(out, text)?;
        let mut written = Vec::new();
        if !self.replays.is_empty() {
            let dir = replay_dir(out);
            std::fs::create_dir_all(&dir)?;
            for (id, cfg) in &self.replays {
                let p = dir.join(format!("{id}.json"));
                std::fs::write(&p, serde_json::to_string_pretty(cfg)? + "\n")?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

pub fn replay_dir(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".replay");
    out.with_file_name(name)
}

/// Output format: the configured one, else from the extension of `out`.
pub fn output_format(config: &RunConfig, out: &Path) -> Format {
    config.output.format.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    })
}

struct Builder<'a> {
    config: &'a RunConfig,
    rows: Vec<ResidualRow>,
    records: Vec<Value>,
    failing: Vec<String>,
    replays: Vec<(String, RunConfig)>,
}

impl<'a> Builder<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Builder {
            config,
            rows: Vec::new(),
            records: Vec::new(),
            failing: Vec::new(),
            replays: Vec::new(),
        }
    }

    fn row(&mut self, grid: &GridSet, tuple_id: &str, name: &str, value: f64) -> bool {
        let pass = value <= self.config.tolerance;
        self.row_with(grid, tuple_id, name, value, pass)
    }

    fn row_with(&mut self, grid: &GridSet, tuple_id: &str, name: &str, value: f64, pass: bool) -> bool {
        self.rows.push(ResidualRow {
            suite: self.config.suite.name().into(),
            tuple_id: tuple_id.into(),
            residual_name: name.into(),
            value,
            grid_n_x1: grid.n_x1,
            grid_n_theta: grid.n_theta,
            hardy_n: grid.hardy_dim,
            tolerance: self.config.tolerance,
            pass,
        });
        pass
    }

    fn fail(&mut self, tuple_id: &str, replay: Generators) {
        self.failing.push(tuple_id.into());
        self.replays.push((tuple_id.into(), self.config.replay_with(replay)));
    }

    fn finish(self) -> SuiteOutcome {
        let pass = self.rows.iter().all(|r| r.pass) && self.failing.is_empty();
        SuiteOutcome {
            report: Report {
                artifact_version: ARTIFACT_VERSION.into(),
                suite: self.config.suite,
                convention: self.config.convention,
                seed: self.config.seed,
                tolerance: self.config.tolerance,
                grid: self.config.grids.clone(),
                pass,
                rows: self.rows,
                records: self.records,
                failing: self.failing,
            },
            replays: self.replays,
        }
    }
}

fn tuple_seed(seed: u64, tuple: usize, slot: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((tuple * 64 + slot) as u64)
}

/// Explicit tuples if given, else `tuples` random ones; ids are `s…` and `t…` respectively.
fn symbol_tuples(config: &RunConfig, grid: &Arc<GridSet>, arity: usize) -> Result<Vec<(String, Vec<SymbolDescriptor>, Vec<FullSymbol>)>> {
    if !config.generators.symbols.is_empty() {
        return config
            .generators
            .symbols
            .iter()
            .enumerate()
            .map(|(t, ds)| {
                let syms = ds.iter().map(|d| d.materialize(grid)).collect::<Result<Vec<_>>>()?;
                Ok((format!("s{t:03}"), ds.clone(), syms))
            })
            .collect();
    }
    let profile = config.profile();
    (0..config.tuples())
        .map(|t| {
            let (ds, syms) = (0..arity)
                .map(|j| generate_descriptor(grid, tuple_seed(config.seed, t, j), &profile))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            Ok((format!("t{t:03}"), ds, syms))
        })
        .collect()
}

fn mixed(r: &CocycleReport, convention: Convention) -> f64 {
    match convention {
        Convention::Literal => r.res_mixed,
        Convention::Consistent => r.res_mixed_consistent,
    }
}

fn cocycle_record(id: &str, r: &CocycleReport, grid: &GridSet) -> Value {
    json!({
        "tuple_id": id,
        "res_Bphi1": r.res_bphi1_connes,
        "res_bphi3": r.res_bphi3,
        "res_mixed": r.res_mixed,
        "res_mixed_consistent": r.res_mixed_consistent,
        "b_phi1": r.b_phi1,
        "connes_b_phi3": r.connes_b_phi3,
        "grid": grid,
    })
}

fn cocycle_rows(b: &mut Builder, grid: &GridSet, id: &str, r: &CocycleReport, suffix: &str) -> bool {
    let convention = b.config.convention;
    let ok1 = b.row(grid, id, &format!("res_Bphi1{suffix}"), r.res_bphi1_connes);
    let ok3 = b.row(grid, id, &format!("res_bphi3{suffix}"), r.res_bphi3);
    let okm = b.row(grid, id, &format!("res_mixed{suffix}"), mixed(r, convention));
    ok1 && ok3 && okm
}

fn symbols_replay(ds: &[SymbolDescriptor]) -> Generators {
    Generators {
        symbols: vec![ds.to_vec()],
        ..Default::default()
    }
}

fn verify_cocycle(config: &RunConfig) -> Result<SuiteOutcome> {
    let grid = Arc::new(config.grids.clone());
    let alg = Arc::new(SymbolAlgebra::new(grid.clone()));
    let mut b = Builder::new(config);
    for (id, ds, syms) in symbol_tuples(config, &grid, 5)? {
        let r = symbol_residuals(&alg, &syms)?;
        b.records.push(cocycle_record(&id, &r, &grid));
        if !cocycle_rows(&mut b, &grid, &id, &r, "") {
            b.fail(&id, symbols_replay(&ds));
        }
    }
    Ok(b.finish())
}

fn verify_trace(config: &RunConfig) -> Result<SuiteOutcome> {
    let grid = Arc::new(config.grids.clone());
    let alg = Arc::new(SymbolAlgebra::new(grid.clone()));
    let mut b = Builder::new(config);
    let n = grid.hardy_dim;
    for (id, ds, syms) in symbol_tuples(config, &grid, 3)? {
        let (s1, s2) = (&syms[0].boundary.block(0, 1).sigma, &syms[1].boundary.block(0, 1).sigma);
        let commutator = commutator_tr_prime(s1, s2, n);
        let integral = fedosov_integral(s1, s2);
        let rel = (commutator - integral).norm() / integral.norm().max(1.0);
        let step = fedosov_step_check(&alg, &syms[0], &syms[1], &syms[2])?;
        let chain = stokes_chain(&alg, &syms[0], &syms[1], &syms[2])?;
        let stokes = match config.convention {
            Convention::Literal => chain.gap_direct,
            Convention::Consistent => chain.gap_rotations,
        };
        let defects = TRACE_DILATIONS
            .iter()
            .map(|&lam| dilation_trace_defect(syms[0].boundary.block(0, 1), lam, n))
            .collect::<Result<Vec<f64>>>()?;
        let mut ok = b.row(&grid, &id, "commutator_trace_rel", rel);
        ok &= b.row(&grid, &id, "fedosov_step", step.gap);
        ok &= b.row(&grid, &id, "stokes_chart", stokes);
        ok &= b.row(&grid, &id, "stokes_boundary", chain.gap_stokes);
        for (lam, d) in TRACE_DILATIONS.iter().zip(&defects) {
            ok &= b.row(&grid, &id, &format!("dilation_trace_{lam}"), *d);
        }
        b.records.push(json!({
            "tuple_id": id,
            "commutator_trace": [commutator.re, commutator.im],
            "fedosov_integral": [integral.re, integral.im],
            "fedosov_step": step,
            "stokes_chain": chain,
            "dilation_trace_defects": defects,
            "grid": &*grid,
        }));
        if !ok {
            b.fail(&id, symbols_replay(&ds));
        }
    }
    Ok(b.finish())
}

type CrossedTuple = (String, Vec<Vec<CrossedTerm>>);

/// Slots 0 and 2 carry `{e, γ, γ⁻¹}`, the others only `e`.
fn crossed_tuples(config: &RunConfig, grid: &Arc<GridSet>) -> Result<Vec<CrossedTuple>> {
    if !config.generators.crossed.is_empty() {
        return Ok(config.generators.crossed.iter().enumerate().map(|(t, x)| (format!("s{t:03}"), x.clone())).collect());
    }
    let profile = config.profile();
    let mut out = Vec::new();
    for (k, gam) in config.groups()?.iter().enumerate() {
        for t in 0..config.tuples() {
            let tuple = k * config.tuples() + t;
            let mut slot_seed = 0;
            let mut draw = |group: &GroupElement| -> Result<CrossedTerm> {
                slot_seed += 1;
                let (symbol, _) = generate_descriptor(grid, tuple_seed(config.seed, tuple, slot_seed), &profile)?;
                Ok(CrossedTerm {
                    group: group.descriptor(),
                    symbol,
                })
            };
            let mut slots = Vec::new();
            for i in 0..5 {
                let mut slot = vec![draw(&GroupElement::identity())?];
                if i == 0 || i == 2 {
                    slot.push(draw(gam)?);
                    slot.push(draw(&gam.inverse())?);
                }
                slots.push(slot);
            }
            out.push((format!("g{k}t{t:03}"), slots));
        }
    }
    Ok(out)
}

fn materialize_crossed(grid: &Arc<GridSet>, slot: &[CrossedTerm]) -> Result<CrossedElement> {
    let mut x = CrossedElement::zero(grid.clone());
    for term in slot {
        let g = GroupElement::from_descriptor(&term.group)?;
        x = x.with(g, term.symbol.materialize(grid)?);
    }
    Ok(x)
}

fn verify_equivariant(config: &RunConfig) -> Result<SuiteOutcome> {
    let grid = Arc::new(config.grids.clone());
    let alg = Arc::new(CrossedAlgebra::new(grid.clone()));
    let mut b = Builder::new(config);
    for (id, slots) in crossed_tuples(config, &grid)? {
        let elems = slots.iter().map(|s| materialize_crossed(&grid, s)).collect::<Result<Vec<_>>>()?;
        let r = crossed_residuals(&alg, &elems)?;
        let mut ok = cocycle_rows(&mut b, &grid, &id, &r, "");
        let mut record = cocycle_record(&id, &r, &grid);
        // the trace formula on the first non-identity summands of slots 0 and 2
        let pick = |slot: &[CrossedTerm]| slot.iter().find(|t| !GroupElement::from_descriptor(&t.group).map_or(true, |g| g.is_identity())).cloned();
        if let (Some(t1), Some(t2)) = (pick(&slots[0]), pick(&slots[2])) {
            let (g1, g2) = (GroupElement::from_descriptor(&t1.group)?, GroupElement::from_descriptor(&t2.group)?.inverse());
            let w1 = BoundaryForm::single(0, g1, t1.symbol.materialize(&grid)?.boundary)?;
            let w2 = BoundaryForm::single(0, g2.clone(), t2.symbol.materialize(&grid)?.boundary)?;
            let tf = trace_formula_check(&w1, &w2)?;
            if !tf.outside_proof_cases {
                ok &= b.row(&grid, &id, "trace_formula", tf.gap);
            }
            record["trace_formula"] = serde_json::to_value(&tf)?;
        }
        b.records.push(record);
        if !ok {
            b.fail(
                &id,
                Generators {
                    crossed: vec![slots.clone()],
                    ..Default::default()
                },
            );
        }
    }
    Ok(b.finish())
}

fn pair_index(config: &RunConfig) -> Result<SuiteOutcome> {
    let grid = Arc::new(config.grids.clone());
    let constants = calibrate_on(&grid, config.seed)?;
    let classes = if config.generators.classes.is_empty() {
        let mut c = boundary_family();
        c.extend(interior_family());
        c.push(ClassDescriptor::Sum {
            parts: vec![c[3].clone(), c[5].clone()],
        });
        c
    } else {
        config.generators.classes.clone()
    };
    let mut b = Builder::new(config);
    b.records.push(json!({ "calibration": constants }));
    for (k, class) in classes.iter().enumerate() {
        let id = format!("c{k:03}");
        let r = pairing_report(class, &grid, &constants, config.seed)?;
        let ok = b.row(&grid, &id, "pairing_gap", r.gap) & (r.nearest_integer == r.oracle);
        let mut record = serde_json::to_value(&r)?;
        record["tuple_id"] = json!(id);
        b.records.push(record);
        if !ok {
            b.fail(
                &id,
                Generators {
                    classes: vec![class.clone()],
                    ..Default::default()
                },
            );
        }
    }
    Ok(b.finish())
}

/// Residuals shrink by 4× per level, or stay below this floor.
pub const SWEEP_FLOOR: f64 = 1e-11;
pub const SWEEP_RATIO: f64 = 4.0;

fn sweep(config: &RunConfig) -> Result<SuiteOutcome> {
    let levels = config.generators.sweep_levels.unwrap_or(2);
    let mut grids = vec![config.grids.clone()];
    for _ in 1..levels {
        let next = grids.last().expect("nonempty").refined();
        grids.push(next);
    }
    let base = Arc::new(config.grids.clone());
    let tuples = symbol_tuples(config, &base, 5)?;
    let mut b = Builder::new(config);
    for (id, ds, _) in &tuples {
        let mut history: Vec<CocycleReport> = Vec::new();
        for (level, g) in grids.iter().enumerate() {
            let g = Arc::new(g.clone());
            let syms = ds.iter().map(|d| d.materialize(&g)).collect::<Result<Vec<_>>>()?;
            let r = symbol_residuals(&Arc::new(SymbolAlgebra::new(g.clone())), &syms)?;
            for (name, v) in names(&r, config.convention) {
                b.row_with(&g, id, &format!("{name}@L{level}"), v, true);
            }
            let mut rec = cocycle_record(id, &r, &g);
            rec["level"] = json!(level);
            b.records.push(rec);
            history.push(r);
        }
        let mut ok = true;
        for w in 1..history.len() {
            for ((name, coarse), (_, fine)) in names(&history[w - 1], config.convention).into_iter().zip(names(&history[w], config.convention)) {
                let met = fine * SWEEP_RATIO <= coarse || (coarse <= SWEEP_FLOOR && fine <= SWEEP_FLOOR);
                // reduction factor fine/coarse; 0 when both vanish
                let factor = if coarse == 0.0 { 0.0 } else { fine / coarse };
                ok &= b.row_with(&grids[w], id, &format!("order_{name}@L{w}"), factor, met);
            }
        }
        if !ok {
            b.fail(id, symbols_replay(ds));
        }
    }
    Ok(b.finish())
}

fn names(r: &CocycleReport, convention: Convention) -> [(&'static str, f64); 3] {
    [("res_Bphi1", r.res_bphi1_connes), ("res_bphi3", r.res_bphi3), ("res_mixed", mixed(r, convention))]
}

/// Runs the configured suite. Report assembly is sequential in tuple order.
pub fn run_suite(config: &RunConfig) -> Result<SuiteOutcome> {
    config.validate()?;
    match config.suite {
        Suite::VerifyCocycle => verify_cocycle(config),
        Suite::VerifyTrace => verify_trace(config),
        Suite::VerifyEquivariant => verify_equivariant(config),
        Suite::PairIndex => pair_index(config),
        Suite::Sweep => sweep(config),
    }
}
