use std::sync::Arc;
use std::time::Instant;

use horofill::builders::{
    build_grid, build_horosphere, flat_region_loop, hard_sphere, random_cycle, Grid, HorosphereComplex,
    HorosphereOptions, TreeProductSpace, TruncatedTree,
};
use horofill::filling::{
    cone_fill, fit_power_law, min_fill_lp, min_fill_oracle, sweep_and_fit, FillStatus, FillingResult, LpOptions,
    OracleOptions,
};
use horofill::lip::{
    an_cover_grid, an_cover_product, audit_cover, audit_g, audit_h0, audit_whitney, ls_cover, map_h0, nerve, whitney,
    GraphMetric, Pipeline,
};
use horofill::rational::{format_q, parse_q, q, to_f64};
use horofill::{CellComplex, Chain, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{self, Config, Family, Kind, Method, SpaceSpec};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("capacity exceeded ({cap}): {detail}")]
    Capacity { cap: &'static str, detail: String },
    #[error("{0}")]
    Core(horofill::Error),
    #[error("{0}")]
    Io(String),
}

impl From<horofill::Error> for RunError {
    fn from(e: horofill::Error) -> Self {
        match e {
            horofill::Error::Capacity(d) => RunError::Capacity { cap: "max_cells", detail: d },
            e => RunError::Core(e),
        }
    }
}

fn schema(msg: impl Into<String>) -> RunError {
    RunError::Config(config::ConfigError::Schema(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Assertion {
    Assertion { name: name.into(), passed, detail }
}

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub instances: Vec<Value>,
    pub summary: Value,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
}

struct Ctx<'a> {
    cfg: &'a Config,
    start: Instant,
    lp: LpOptions,
}

impl Ctx<'_> {
    fn tick(&self) -> Result<(), RunError> {
        let spent = self.start.elapsed().as_secs();
        if spent > self.cfg.caps.time_budget_s {
            return Err(RunError::Capacity {
                cap: "time_budget_s",
                detail: format!("{spent}s spent, budget {}s", self.cfg.caps.time_budget_s),
            });
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn grid(&self) -> Result<Grid, RunError> {
        match &self.cfg.space {
            Some(SpaceSpec::Grid { dims, side }) => Ok(build_grid(*side, *dims, self.cfg.caps.max_cells)?),
            _ => Err(schema(format!("kind {} needs a grid space here", self.cfg.kind.name()))),
        }
    }

    fn tree_product(&self, depth_override: Option<usize>) -> Result<(Arc<TreeProductSpace>, Q), RunError> {
        let Some(SpaceSpec::Horosphere { n, depth, branching, c0, slopes, level }) = &self.cfg.space else {
            return Err(schema(format!("kind {} needs a horosphere space here", self.cfg.kind.name())));
        };
        let depth = depth_override.unwrap_or(*depth);
        let tree = TruncatedTree::new(*branching, depth)?;
        let slope = match slopes {
            Some(s) if s.len() != *n => return Err(schema(format!("{} slopes for {n} factors", s.len()))),
            Some(s) => s.iter().map(|x| parse_q(x)).collect::<horofill::Result<Vec<Q>>>()?,
            None => vec![q(1); *n],
        };
        let c0 = match c0 {
            Some(c) => parse_q(c)?,
            None => q(depth as i64),
        };
        let sp = TreeProductSpace::new(vec![tree; *n], slope, c0, self.cfg.caps.max_cells)?;
        Ok((Arc::new(sp), parse_q(level)?))
    }

    fn horosphere(&self, depth_override: Option<usize>) -> Result<HorosphereComplex, RunError> {
        let (sp, level) = self.tree_product(depth_override)?;
        let opts = HorosphereOptions { max_cells: self.cfg.caps.max_cells, ..Default::default() };
        Ok(build_horosphere(sp, level, &opts)?)
    }

    fn lp_fill(&self, cx: &CellComplex, c: &Chain) -> horofill::Result<FillingResult> {
        min_fill_lp(cx, c, None, &self.lp)
    }
}

/// Numbers go out as an exact rational next to its float.
fn exact(x: &Q) -> Value {
    json!({ "exact": format_q(x), "approx": to_f64(x) })
}

/// Blank when there is no filling to measure.
fn mass_cell(m: &str, status: FillStatus) -> String {
    match status {
        FillStatus::Optimal | FillStatus::Feasible => m.to_string(),
        _ => String::new(),
    }
}

pub fn execute(cfg: &Config) -> Result<Outcome, RunError> {
    let ctx = Ctx {
        cfg,
        start: Instant::now(),
        lp: LpOptions { max_columns: cfg.caps.max_lp_iters, ..Default::default() },
    };
    let out = match cfg.kind {
        Kind::FillSweep => fill_sweep(&ctx),
        Kind::HardSphere => hard_spheres(&ctx),
        Kind::Pipeline => pipeline(&ctx),
        Kind::CoverAudit => cover_audit(&ctx),
        Kind::WhitneyAudit => whitney_audit(&ctx),
    }?;
    ctx.tick()?;
    Ok(out)
}

fn fill_sweep(ctx: &Ctx) -> Result<Outcome, RunError> {
    let f = ctx.cfg.fill_sweep.as_ref().expect("validated");
    let (grid, z) = match ctx.cfg.space {
        Some(SpaceSpec::Grid { .. }) => (Some(ctx.grid()?), None),
        _ => (None, Some(ctx.horosphere(None)?)),
    };
    let cx: &CellComplex = match (&grid, &z) {
        (Some(g), _) => &g.complex,
        (_, Some(z)) => &z.complex,
        _ => unreachable!(),
    };
    let mut loops: Vec<(String, Chain)> = Vec::new();
    match f.family {
        Family::GridSquares => {
            let g = grid.as_ref().ok_or_else(|| schema("grid-squares needs a grid space"))?;
            for &l in &f.sizes {
                loops.push((format!("square-{l}"), g.square_loop(l)?));
            }
        }
        Family::FlatLoops => {
            let z = z.as_ref().ok_or_else(|| schema("flat-loops needs a horosphere space"))?;
            for [lo, up] in &f.boxes {
                loops.push((format!("flat-{lo:?}-{up:?}"), flat_region_loop(z, lo, up)?));
            }
        }
        Family::RandomCycles => {
            let budget = parse_q(f.budget.as_deref().unwrap())?;
            let k = f.k.unwrap();
            for i in 0..f.count.unwrap() {
                let seed = ctx.seed().wrapping_add(i as u64);
                let c = random_cycle(cx, k, &budget, seed)?;
                if !c.is_zero() {
                    loops.push((format!("random-{seed}"), c));
                }
            }
        }
    }
    if f.method == Method::Cone && z.is_none() {
        return Err(schema("the cone method needs a horosphere space"));
    }
    ctx.tick()?;
    let oracle = OracleOptions::default();
    let (points, fit) = sweep_and_fit(&loops, |c| cx.mass(c), |c| match f.method {
        Method::Lp => ctx.lp_fill(cx, c),
        Method::Oracle => min_fill_oracle(cx, c, None, &oracle),
        Method::Cone => cone_fill(z.as_ref().unwrap(), c),
    })?;
    if let Some(p) = points.iter().find(|p| p.result.status == FillStatus::Capped) {
        return Err(RunError::Capacity { cap: "max_lp_iters", detail: format!("instance {}", p.id) });
    }
    let mut table = Table {
        name: "fillings".into(),
        header: vec!["id", "mass_in", "mass_in_f64", "fill_mass", "fill_mass_f64", "status", "duality_gap"],
        rows: Vec::new(),
    };
    let mut instances = Vec::new();
    for p in &points {
        let rec = p.result.record(&p.id);
        table.rows.push(vec![
            p.id.clone(),
            format_q(&p.mass_in),
            to_f64(&p.mass_in).to_string(),
            mass_cell(&rec.mass, rec.status),
            mass_cell(&rec.mass_f64.to_string(), rec.status),
            format!("{:?}", rec.status).to_lowercase(),
            rec.duality_gap.clone().unwrap_or_default(),
        ]);
        instances.push(json!({ "id": p.id, "mass_in": exact(&p.mass_in), "filling": rec }));
    }
    let mut assertions = vec![check(
        "fillings_have_the_right_boundary",
        points
            .iter()
            .zip(&loops)
            .all(|(p, (_, c))| !p.result.is_feasible() || cx.boundary(&p.result.filling).ok().as_ref() == Some(c)),
        format!("{} instances", points.len()),
    )];
    let masses: Vec<f64> = points.iter().filter(|p| p.result.is_feasible()).map(|p| to_f64(&p.mass_in)).collect();
    if f.cross_check_oracle {
        let mismatches: Vec<String> = points
            .iter()
            .zip(&loops)
            .filter_map(|(p, (_, c))| {
                let o = min_fill_oracle(cx, c, None, &oracle);
                match o {
                    Ok(o) if o.is_feasible() && o.mass == p.result.mass => None,
                    Ok(o) => Some(format!("{}: lp {} oracle {}", p.id, format_q(&p.result.mass), format_q(&o.mass))),
                    Err(e) => Some(format!("{}: {e}", p.id)),
                }
            })
            .collect();
        assertions.push(check("lp_equals_oracle", mismatches.is_empty(), format!("mismatches {mismatches:?}")));
    }
    if f.exact_square {
        let ok = points.iter().zip(&f.sizes).all(|(p, &l)| p.result.mass == q((l * l) as i64));
        assertions.push(check("square_fills_with_area", ok, "fill mass equals l^2 for every square".into()));
    }
    if let Some([lo, hi]) = f.exponent {
        let e = fit.as_ref().map(|f| f.exponent);
        assertions.push(check(
            "exponent_in_range",
            e.is_some_and(|e| (lo..=hi).contains(&e)),
            format!("fitted {e:?}, wanted [{lo}, {hi}]"),
        ));
    }
    if let Some(m) = f.min_r2 {
        let r2 = fit.as_ref().map(|f| f.r2);
        assertions.push(check("fit_r2", r2.is_some_and(|r| r >= m), format!("r2 {r2:?}, wanted >= {m}")));
    }
    if let Some(m) = f.min_span {
        let span = masses.iter().cloned().fold(0.0, f64::max) / masses.iter().cloned().fold(f64::MAX, f64::min);
        assertions.push(check("mass_span", span >= m, format!("span {span:.4}, wanted >= {m}")));
    }
    if let Some(m) = f.min_points {
        let n = fit.as_ref().map_or(0, |f| f.n_points);
        assertions.push(check("fitted_points", n >= m, format!("{n} points, wanted >= {m}")));
    }
    Ok(Outcome { instances, summary: json!({ "fit": fit }), tables: vec![table], assertions })
}

fn hard_spheres(ctx: &Ctx) -> Result<Outcome, RunError> {
    let h = ctx.cfg.hard_sphere.as_ref().expect("validated");
    let z = ctx.horosphere(None)?;
    let mut table = Table {
        name: "hard_spheres".into(),
        header: vec!["r", "sphere_mass", "fv_x", "fv_x_f64", "status_x", "fv_z", "fv_z_f64", "status_z"],
        rows: Vec::new(),
    };
    let mut instances = Vec::new();
    let mut xs = Vec::new();
    let mut zs: Vec<FillingResult> = Vec::new();
    for &r in &h.radii {
        let s = hard_sphere(&z, r)?;
        let x = z.include(&s.cycle)?;
        let fx = ctx.lp_fill(&z.host.complex, &x)?;
        let fz = ctx.lp_fill(&z.complex, &s.cycle)?;
        ctx.tick()?;
        if fx.status == FillStatus::Capped || fz.status == FillStatus::Capped {
            return Err(RunError::Capacity { cap: "max_lp_iters", detail: format!("hard sphere r = {r}") });
        }
        let mass = z.complex.mass(&s.cycle)?;
        let (rx, rz) = (fx.record(&format!("x-{r}")), fz.record(&format!("z-{r}")));
        table.rows.push(vec![
            r.to_string(),
            format_q(&mass),
            mass_cell(&rx.mass, rx.status),
            mass_cell(&rx.mass_f64.to_string(), rx.status),
            format!("{:?}", rx.status).to_lowercase(),
            mass_cell(&rz.mass, rz.status),
            mass_cell(&rz.mass_f64.to_string(), rz.status),
            format!("{:?}", rz.status).to_lowercase(),
        ]);
        instances.push(json!({ "r": r, "sphere_mass": exact(&mass), "ambient": rx, "horosphere": rz, "horosphere_note": fz.note }));
        xs.push((r as f64, fx));
        zs.push(fz);
    }
    let x_fit = fit_power_law(&xs.iter().filter(|p| p.1.is_feasible()).map(|p| (p.0, to_f64(&p.1.mass))).collect::<Vec<_>>());
    let x_ok = xs.iter().all(|p| p.1.status == FillStatus::Optimal) && x_fit.is_some_and(|f| f.0 <= h.max_x_exponent);
    let z_feasible = zs.iter().all(|r| r.is_feasible());
    let ratios: Vec<f64> =
        if z_feasible { zs.windows(2).map(|w| to_f64(&w[1].mass) / to_f64(&w[0].mass)).collect() } else { Vec::new() };
    let z_ok = z_feasible && ratios.iter().all(|&r| r >= h.min_ratio) && ratios.windows(2).all(|w| w[1] >= w[0]);
    let assertions = vec![
        check(
            "ambient_growth_polynomial",
            x_ok,
            format!("exponent {:?}, wanted <= {}", x_fit.map(|f| f.0), h.max_x_exponent),
        ),
        check(
            "horosphere_growth_exponential",
            z_ok,
            if z_feasible {
                format!("successive ratios {ratios:?}, wanted >= {} and nondecreasing", h.min_ratio)
            } else {
                format!("no filling inside the horosphere: {}", zs.iter().find_map(|r| r.note.clone()).unwrap_or_default())
            },
        ),
    ];
    Ok(Outcome {
        instances,
        summary: json!({ "ambient_exponent": x_fit.map(|f| f.0), "horosphere_ratios": ratios }),
        tables: vec![table],
        assertions,
    })
}

fn pipeline(ctx: &Ctx) -> Result<Outcome, RunError> {
    let p = ctx.cfg.pipeline.as_ref().expect("validated");
    let eps = parse_q(&p.eps)?;
    let mut table = Table {
        name: "pipeline".into(),
        header: vec!["depth", "a", "b", "distance", "fill_mass", "fill_mass_f64", "ratio"],
        rows: Vec::new(),
    };
    let mut instances = Vec::new();
    let mut constants = Vec::new();
    let mut exact_boundaries = true;
    for &depth in &p.depths {
        let z = ctx.horosphere(Some(depth))?;
        let pl = Pipeline::new(&z, &eps, ctx.cfg.caps.max_cells)?;
        let vs = z.complex.cells_of_dim(0).to_vec();
        if vs.len() < 2 {
            return Err(schema("the horosphere has fewer than two vertices"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
        let mut c: f64 = 0.0;
        let mut done = 0;
        while done < p.pairs {
            let (a, b) = (vs[rng.gen_range(0..vs.len())], vs[rng.gen_range(0..vs.len())]);
            if a == b {
                continue;
            }
            let (xa, xb) = (z.host_vertex(a).unwrap(), z.host_vertex(b).unwrap());
            let beta = pl.geodesic(xa, xb)?;
            let alpha = Chain::from_int_terms(0, [(b, 1), (a, -1)]);
            let (r, _) = pl.undistorted_fill(&alpha, &beta)?;
            exact_boundaries &= z.complex.boundary(&r.filling)? == alpha;
            let d = z.host.distance(xa, xb);
            let ratio = to_f64(&r.mass) / (d as f64 + 1.0);
            c = c.max(ratio);
            table.rows.push(vec![
                depth.to_string(),
                a.to_string(),
                b.to_string(),
                d.to_string(),
                format_q(&r.mass),
                to_f64(&r.mass).to_string(),
                ratio.to_string(),
            ]);
            instances.push(json!({ "depth": depth, "a": a, "b": b, "distance": d, "fill_mass": exact(&r.mass) }));
            done += 1;
            ctx.tick()?;
        }
        constants.push((depth, c));
    }
    let lo = constants.iter().map(|c| c.1).fold(f64::MAX, f64::min);
    let hi = constants.iter().map(|c| c.1).fold(0.0, f64::max);
    let assertions = vec![
        check("boundaries_exact", exact_boundaries, format!("{} fillings", instances.len())),
        check(
            "constant_stable_across_depths",
            hi <= p.stability * lo,
            format!("measured constants {constants:?}, wanted max <= {} x min", p.stability),
        ),
    ];
    Ok(Outcome {
        instances,
        summary: json!({ "constants": constants.iter().map(|(d, c)| json!({ "depth": d, "c": c })).collect::<Vec<_>>() }),
        tables: vec![table],
        assertions,
    })
}

fn cover_audit(ctx: &Ctx) -> Result<Outcome, RunError> {
    let a = ctx.cfg.cover_audit.as_ref().expect("validated");
    let eps = parse_q(&a.eps)?;
    let (m, c) = match ctx.cfg.space {
        Some(SpaceSpec::Grid { .. }) => {
            if a.subset != "side" {
                return Err(schema("grid cover audits take subset = \"side\""));
            }
            let g = ctx.grid()?;
            let m = GraphMetric::new(&g.complex, a.max_points)?;
            // the face x_0 = 0
            let per = g.side + 1;
            let mut side = Vec::new();
            for i in 0..per.pow(g.dims as u32 - 1) {
                let mut pt = vec![0usize; g.dims];
                let mut rest = i;
                for x in pt.iter_mut().skip(1) {
                    *x = rest % per;
                    rest /= per;
                }
                let id = g.vertex_id(&pt).ok_or_else(|| schema("grid face point outside the grid"))?;
                side.push(m.index_of(id).unwrap());
            }
            let c = ls_cover(&m, &side, &eps, |s| an_cover_grid(&g, &m, s))?;
            (m, c)
        }
        _ => {
            if a.subset != "level" {
                return Err(schema("horosphere cover audits take subset = \"level\""));
            }
            let (sp, level) = ctx.tree_product(None)?;
            let m = GraphMetric::new(&sp.complex, a.max_points)?;
            let zs: Vec<usize> =
                sp.vertices().iter().filter(|&&v| sp.h(v) == level).map(|&v| m.index_of(v).unwrap()).collect();
            let c = ls_cover(&m, &zs, &eps, |s| an_cover_product(&sp, &m, s))?;
            (m, c)
        }
    };
    ctx.tick()?;
    let ca = audit_cover(&m, &c);
    let nv = nerve(&c)?;
    let ga = audit_g(&m, &c, &nv)?;
    let ha = audit_h0(&m, &c, &nv, &map_h0(&c));
    let table = Table {
        name: "cover".into(),
        header: vec![
            "elements",
            "near",
            "far",
            "multiplicity",
            "multiplicity_bound",
            "gamma_measured",
            "gamma_declared",
            "nerve_dim",
            "lipschitz_g",
            "lipschitz_bound",
        ],
        rows: vec![vec![
            ca.elements.to_string(),
            ca.near.to_string(),
            ca.far.to_string(),
            ca.multiplicity.to_string(),
            ca.multiplicity_bound.to_string(),
            ca.gamma_measured.clone(),
            ca.declared.gamma.clone(),
            ga.nerve_dim.to_string(),
            ga.lipschitz.clone(),
            ga.bound.clone(),
        ]],
    };
    let assertions = vec![
        check("cover_covers_every_point", ca.covers_every_point, String::new()),
        check("cover_diameters", ca.diam_ok, format!("max ratio {:.4}", ca.max_diam_ratio)),
        check("cover_distance_scale", ca.distance_ok, format!("max far ratio {:.4}", ca.max_far_ratio)),
        check("cover_components", ca.components_ok, String::new()),
        check("cover_multiplicity", ca.multiplicity_ok, format!("{} of {}", ca.multiplicity, ca.multiplicity_bound)),
        check("cover_gamma", ca.gamma_ok, format!("{} of {}", ca.gamma_measured, ca.declared.gamma)),
        check("g_coordinates", ga.coordinates_ok, String::new()),
        check("g_star", ga.star_ok, String::new()),
        check("g_lipschitz", ga.lipschitz_ok, format!("{} of {}", ga.lipschitz, ga.bound)),
        check("h0_offsets", ha.passed, format!("edge {:.4}, near {:.4}, return {:.4}", ha.edge_lipschitz, ha.near_offset, ha.return_offset)),
    ];
    Ok(Outcome {
        instances: vec![json!({ "cover": ca, "g": ga, "h0": ha, "warnings": c.warnings })],
        summary: json!({ "elements": ca.elements }),
        tables: vec![table],
        assertions,
    })
}

fn whitney_audit(ctx: &Ctx) -> Result<Outcome, RunError> {
    let w = ctx.cfg.whitney_audit.as_ref().expect("validated");
    let mut table = Table {
        name: "whitney".into(),
        header: vec!["side", "dim", "cubes", "boundary_cubes", "exact_tiling", "min_side", "boundary_unit", "max_ratio", "ratio_ok"],
        rows: Vec::new(),
    };
    let mut instances = Vec::new();
    let mut all = true;
    for &l in &w.sides {
        for &k in &w.dims {
            let wh = whitney(l, k)?;
            let a = audit_whitney(&wh);
            all &= a.passed();
            table.rows.push(vec![
                wh.side.to_string(),
                k.to_string(),
                a.cubes.to_string(),
                a.boundary_cubes.to_string(),
                a.exact_tiling.to_string(),
                a.min_side.to_string(),
                a.boundary_unit.to_string(),
                a.max_ratio.to_string(),
                a.ratio_ok.to_string(),
            ]);
            instances.push(json!({ "side": wh.side, "requested_side": l, "dim": k, "audit": a }));
            ctx.tick()?;
        }
    }
    let n = instances.len();
    Ok(Outcome {
        instances,
        summary: json!({ "boxes": n }),
        tables: vec![table],
        assertions: vec![check("whitney_invariants", all, format!("{n} boxes"))],
    })
}
