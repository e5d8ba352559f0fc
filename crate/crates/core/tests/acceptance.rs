//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ...: PASS|FAIL` line with the measured values.

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use horofill::builders::{
    build_grid, build_horosphere, flat_region_loop, hard_sphere, random_cycle, HorosphereComplex, HorosphereOptions,
    TreeProductSpace, TruncatedTree,
};
use horofill::building::{
    downward_link, is_characteristic, opposite_witness, project_to_geodesic, slice_project, End,
};
use horofill::deform::ff_deform;
use horofill::filling::{
    fit_power_law, min_fill_lp, min_fill_oracle, sweep_and_fit, FillStatus, LpOptions, OracleOptions,
};
use horofill::lip::{
    an_cover_grid, an_cover_product, audit_cover, audit_g, audit_h0, audit_whitney, exploded_simplex, ls_cover,
    map_h0, nerve, whitney, GraphMetric, Pipeline,
};
use horofill::rational::{q, to_f64, Q};
use horofill::refine::{barycentric_subdivide, triangulate};
use horofill::{CellComplex, Chain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n} ({name}): {verdict} [{:.1}s] {detail}\n", elapsed.as_secs_f64());
    // Written straight to the stream so the line shows up without --nocapture.
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn space(n: usize, depth: usize, c0: i64) -> Arc<TreeProductSpace> {
    let t = TruncatedTree::new(2, depth).unwrap();
    Arc::new(TreeProductSpace::new(vec![t; n], vec![q(1); n], q(c0), 20_000_000).unwrap())
}

fn slice(n: usize, depth: usize, c0: i64, level: Q) -> HorosphereComplex {
    build_horosphere(space(n, depth, c0), level, &HorosphereOptions::default()).unwrap()
}

#[test]
fn criterion_01_exact_chain_identities() {
    let start = Instant::now();
    let mut checked = Vec::new();
    let mut ok = true;
    let mut check = |name: String, cx: &CellComplex| -> bool {
        checked.push(name);
        cx.check_boundary_squared().is_ok()
    };
    for (l, d) in [(4, 2), (3, 3)] {
        let g = build_grid(l, d, 1_000_000).unwrap();
        ok &= check(format!("grid{d}d-{l}"), &g.complex);
        let tri = triangulate(&g.complex).unwrap();
        ok &= check(format!("grid{d}d-{l}-tri"), &tri.complex);
        ok &= tri.refine.check_chain_map(&g.complex, &tri.complex).is_ok();
        let sd = barycentric_subdivide(&tri.complex).unwrap();
        ok &= check(format!("grid{d}d-{l}-sd"), &sd.complex);
        ok &= sd.refine.check_chain_map(&tri.complex, &sd.complex).is_ok();
    }
    for n in 1..=3 {
        for depth in 1..=4 {
            let sp = space(n, depth, depth as i64);
            ok &= check(format!("product n{n} d{depth}"), &sp.complex);
        }
    }
    for (n, depth, level) in [(2, 4, q(0)), (2, 4, Q::new(1.into(), 2.into())), (3, 3, q(0)), (3, 4, q(0)), (3, 3, Q::new(1.into(), 3.into()))] {
        let z = slice(n, depth, depth as i64, level.clone());
        ok &= check(format!("slice n{n} d{depth} t{level}"), &z.complex);
        let tri = z.triangulation.as_ref().unwrap();
        ok &= check(format!("slice n{n} d{depth} t{level} tri"), &tri.complex);
        ok &= tri.refine.check_chain_map(&z.complex, &tri.complex).is_ok();
        for &c in z.complex.cells_of_dim(z.complex.dim()).iter().take(200) {
            let x = z.include_cell(c).unwrap();
            ok &= z.host.complex.boundary(&x).unwrap() == z.include(&z.complex.cell_boundary(c)).unwrap();
        }
    }
    for d in 1..=4 {
        let e = exploded_simplex(d).unwrap();
        ok &= check(format!("exploded {d}"), &e.complex);
        ok &= e.rho1.check_chain_map(&e.complex, &e.simplex).is_ok();
        ok &= e.rho2.check_chain_map(&e.complex, &e.subdivision).is_ok();
    }
    let elapsed = start.elapsed();
    report(
        1,
        "exact chain identities",
        ok && elapsed < Duration::from_secs(60),
        elapsed,
        format!("{} complexes, refinement and inclusion maps commute with the boundary", checked.len()),
    );
}

#[test]
fn criterion_02_federer_fleming() {
    let start = Instant::now();
    let bases: Vec<(&str, CellComplex, usize)> = vec![
        ("square", triangulate(&build_grid(2, 2, 10_000).unwrap().complex).unwrap().complex, 1),
        ("cube", triangulate(&build_grid(1, 3, 10_000).unwrap().complex).unwrap().complex, 2),
        ("slice", slice(3, 2, 3, q(0)).triangulation.unwrap().complex, 1),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (name, base, k) in &bases {
        let sd1 = barycentric_subdivide(base).unwrap();
        let sd2 = barycentric_subdivide(&sd1.complex).unwrap();
        let mut maxes = Vec::new();
        for sd in [&sd1, &sd2] {
            let mut worst = Q::default();
            // budgets scale with the cells so both levels see cycles of similar combinatorial size
            let tops = sd.complex.cells_of_dim(k + 1);
            let unit = tops.iter().map(|&c| sd.complex.mass(&sd.complex.cell_boundary(c)).unwrap()).max().unwrap();
            for seed in 0..200u64 {
                let budget = &unit * q(1 + (seed % 6) as i64);
                let a = random_cycle(&sd.complex, *k, &budget, seed).unwrap();
                let d = ff_deform(sd, &a).unwrap();
                let rhs = &a - &d.image_fine;
                let lhs = if d.homotopy.is_zero() { Chain::zero(a.dim()) } else { sd.complex.boundary(&d.homotopy).unwrap() };
                if lhs != rhs {
                    ok = false;
                    details.push(format!("{name} seed {seed}: homotopy identity broken"));
                }
                if !d.image.is_zero() && !sd.coarse.is_cycle(&d.image).unwrap() {
                    ok = false;
                    details.push(format!("{name} seed {seed}: image is not a cycle"));
                }
                if d.mass_ratio_p > worst {
                    worst = d.mass_ratio_p.clone();
                }
            }
            maxes.push(worst);
        }
        let scale_ok = maxes[1] <= &maxes[0] * q(2);
        ok &= scale_ok;
        details.push(format!("{name}: max P ratio {:.3} then {:.3}", to_f64(&maxes[0]), to_f64(&maxes[1])));
    }
    let elapsed = start.elapsed();
    report(2, "Federer-Fleming", ok && elapsed < Duration::from_secs(300), elapsed, details.join("; "));
}

/// Random boundaries of integer combinations of region cells.
fn region_cycles(cx: &CellComplex, region: &[usize], count: usize, seed: u64) -> Vec<Chain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cx.cell(region[0]).dim;
    let mut out = Vec::new();
    while out.len() < count {
        let mut c = Chain::zero(dim);
        for &r in region {
            let v: i64 = rng.gen_range(-2..=2);
            if v != 0 && rng.gen_bool(0.4) {
                c.add_term(r, q(v));
            }
        }
        let b = cx.boundary(&c).unwrap();
        if !b.is_zero() {
            out.push(b);
        }
    }
    out
}

#[test]
fn criterion_03_lp_matches_oracle() {
    let start = Instant::now();
    let mut cases: Vec<(String, CellComplex, Vec<usize>)> = Vec::new();
    for l in 1..=4 {
        let g = build_grid(l, 2, 10_000).unwrap();
        let squares: Vec<usize> = g.complex.cells_of_dim(2).iter().copied().take(16).collect();
        cases.push((format!("grid {l}"), g.complex, squares));
    }
    let g = build_grid(1, 3, 10_000).unwrap();
    cases.push(("cube faces".into(), g.complex.clone(), g.complex.cells_of_dim(2).to_vec()));
    cases.push(("cube".into(), g.complex.clone(), g.complex.cells_of_dim(3).to_vec()));
    let g = build_grid(2, 3, 10_000).unwrap();
    let faces: Vec<usize> = g.complex.cells_of_dim(2).iter().copied().take(24).collect();
    cases.push(("3d faces".into(), g.complex, faces));
    let z = slice(2, 2, 2, q(0));
    let edges = z.complex.cells_of_dim(1).to_vec();
    if edges.len() <= 24 {
        cases.push(("slice n2 d2".into(), z.complex.clone(), edges));
    }
    let z = slice(3, 2, 3, q(0));
    let tris: Vec<usize> = z.complex.cells_of_dim(2).iter().copied().take(24).collect();
    cases.push(("slice n3 d2".into(), z.complex.clone(), tris));
    let sp = space(2, 2, 2);
    let squares: Vec<usize> = sp.complex.cells_of_dim(2).iter().copied().take(24).collect();
    cases.push(("product n2 d2".into(), sp.complex.clone(), squares));

    let mut ok = true;
    let mut instances = 0;
    let mut mismatches = Vec::new();
    for (i, (name, cx, region)) in cases.iter().enumerate() {
        let reg: BTreeSet<usize> = region.iter().copied().collect();
        for (j, alpha) in region_cycles(cx, region, 12, i as u64).iter().enumerate() {
            let lp = min_fill_lp(cx, alpha, Some(&reg), &LpOptions::default()).unwrap();
            let or = min_fill_oracle(cx, alpha, Some(&reg), &OracleOptions::default()).unwrap();
            instances += 1;
            let same = lp.status == FillStatus::Optimal && or.is_feasible() && lp.mass == or.mass;
            if !same {
                mismatches.push(format!("{name}#{j}: lp {} oracle {}", lp.mass, or.mass));
            }
            ok &= same;
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        "LP equals oracle",
        ok && elapsed < Duration::from_secs(120),
        elapsed,
        format!("{instances} instances, mismatches {:?}", mismatches),
    );
}

#[test]
fn criterion_04_euclidean_baseline() {
    let start = Instant::now();
    let g = build_grid(6, 2, 100_000).unwrap();
    let loops: Vec<(String, Chain)> = (2..=6).map(|l| (format!("L{l}"), g.square_loop(l).unwrap())).collect();
    let (points, fit) = sweep_and_fit(
        &loops,
        |c| g.complex.mass(c),
        |c| min_fill_lp(&g.complex, c, None, &LpOptions::default()),
    )
    .unwrap();
    let exact = points.iter().zip(2..=6i64).all(|(p, l)| p.result.mass == q(l * l) && p.result.certified());
    let fit = fit.unwrap();
    let elapsed = start.elapsed();
    report(
        4,
        "Euclidean baseline",
        exact && (1.9..=2.1).contains(&fit.exponent) && elapsed < Duration::from_secs(60),
        elapsed,
        format!("fillings L^2 exact: {exact}, exponent {:.4}, r2 {:.4}", fit.exponent, fit.r2),
    );
}

#[test]
fn criterion_05_rank_two_hardness() {
    let start = Instant::now();
    let z = slice(2, 5, 5, q(0));
    let mut fx = Vec::new();
    let mut fz = Vec::new();
    for r in 1..=4usize {
        let h = hard_sphere(&z, r).unwrap();
        let x = z.include(&h.cycle).unwrap();
        let a = min_fill_lp(&z.host.complex, &x, None, &LpOptions::default()).unwrap();
        let b = min_fill_lp(&z.complex, &h.cycle, None, &LpOptions::default()).unwrap();
        fx.push((r as f64, to_f64(&a.mass), a.status));
        fz.push(b);
    }
    let x_ok = fx.iter().all(|p| p.2 == FillStatus::Optimal)
        && fit_power_law(&fx.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>()).is_some_and(|(e, _, _)| e <= 3.0);
    let z_feasible = fz.iter().all(|r| r.is_feasible());
    let ratios: Vec<f64> = if z_feasible {
        fz.windows(2).map(|w| to_f64(&w[1].mass) / to_f64(&w[0].mass)).collect()
    } else {
        Vec::new()
    };
    let z_ok = z_feasible && ratios.iter().all(|&r| r >= 1.5) && ratios.windows(2).all(|w| w[1] >= w[0]);
    let elapsed = start.elapsed();
    report(
        5,
        "rank-2 hardness",
        x_ok && z_ok && elapsed < Duration::from_secs(1800),
        elapsed,
        format!(
            "ambient fillings {:?}; slice statuses {:?} ({}); ratios {:?}",
            fx.iter().map(|p| p.1).collect::<Vec<_>>(),
            fz.iter().map(|r| r.status).collect::<Vec<_>>(),
            fz.iter().find_map(|r| r.note.clone()).unwrap_or_default(),
            ratios
        ),
    );
}

#[test]
fn criterion_06_rank_three_quadratic() {
    let start = Instant::now();
    let z = slice(3, 4, 4, q(0));
    let mut loops = Vec::new();
    for a in 0..=3i64 {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                loops.push((format!("up {a}{b}{c}"), flat_region_loop(&z, &[a, b, c], &[4, 4, 4]).unwrap()));
            }
        }
    }
    for upper in [[2i64, 2, 2], [3, 2, 2], [3, 3, 2], [1, 2, 3], [2, 2, 4], [3, 1, 2]] {
        if let Ok(c) = flat_region_loop(&z, &[0, 0, 0], &upper) {
            loops.push((format!("down {upper:?}"), c));
        }
    }
    for (lower, upper) in [([1i64, 0, 0], [3i64, 3, 3]), ([0, 1, 0], [4, 2, 3]), ([1, 1, 0], [2, 4, 4])] {
        if let Ok(c) = flat_region_loop(&z, &lower, &upper) {
            loops.push((format!("band {lower:?} {upper:?}"), c));
        }
    }
    let (points, fit) = sweep_and_fit(
        &loops,
        |c| z.complex.mass(c),
        |c| min_fill_lp(&z.complex, c, None, &LpOptions::default()),
    )
    .unwrap();
    let masses: Vec<f64> = points.iter().map(|p| to_f64(&p.mass_in)).collect();
    let span = masses.iter().cloned().fold(f64::MIN, f64::max) / masses.iter().cloned().fold(f64::MAX, f64::min);
    let fit = fit.unwrap();
    let elapsed = start.elapsed();
    report(
        6,
        "rank-3 quadratic filling",
        fit.n_points >= 8
            && span >= 4.0
            && (1.5..=2.6).contains(&fit.exponent)
            && fit.r2 >= 0.8
            && elapsed < Duration::from_secs(3600),
        elapsed,
        format!(
            "{} loops, mass span {:.2}, exponent {:.4}, r2 {:.4}, excluded {}",
            fit.n_points,
            span,
            fit.exponent,
            fit.r2,
            fit.excluded.len()
        ),
    );
}

fn pipeline_constant(depth: usize, pairs: usize, seed: u64) -> (f64, usize) {
    let z = slice(2, depth, depth as i64, q(0));
    let p = Pipeline::new(&z, &q(1), 20_000).unwrap();
    let vs = z.complex.cells_of_dim(0).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let (a, b) = (vs[rng.gen_range(0..vs.len())], vs[rng.gen_range(0..vs.len())]);
        if a == b {
            continue;
        }
        let (xa, xb) = (z.host_vertex(a).unwrap(), z.host_vertex(b).unwrap());
        let beta = p.geodesic(xa, xb).unwrap();
        let alpha = Chain::from_int_terms(0, [(b, 1), (a, -1)]);
        let (r, _) = p.undistorted_fill(&alpha, &beta).unwrap();
        assert_eq!(z.complex.boundary(&r.filling).unwrap(), alpha);
        let len = to_f64(&r.mass);
        let d = z.host.distance(xa, xb) as f64;
        c = c.max(len / (d + 1.0));
        done += 1;
    }
    (c, done)
}

#[test]
fn criterion_07_undistortion_pipeline() {
    let start = Instant::now();
    let (c4, n4) = pipeline_constant(4, 50, 11);
    let (c5, n5) = pipeline_constant(5, 50, 11);
    let stable = c4.max(c5) <= 2.0 * c4.min(c5);
    let elapsed = start.elapsed();
    report(
        7,
        "undistortion pipeline",
        n4 == 50 && n5 == 50 && stable && elapsed < Duration::from_secs(600),
        elapsed,
        format!("C at depth 4 = {c4:.4}, at depth 5 = {c5:.4} over 50 pairs each"),
    );
}

#[test]
fn criterion_08_cover_and_nerve_audit() {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();

    let g = build_grid(12, 2, 100_000).unwrap();
    let m = GraphMetric::new(&g.complex, 10_000).unwrap();
    let side: Vec<usize> = (0..=12).map(|y| m.index_of(g.vertex_id(&[0, y]).unwrap()).unwrap()).collect();
    let c = ls_cover(&m, &side, &q(1), |s| an_cover_grid(&g, &m, s)).unwrap();
    let a = audit_cover(&m, &c);
    let nv = nerve(&c).unwrap();
    let ga = audit_g(&m, &c, &nv).unwrap();
    let ha = audit_h0(&m, &c, &nv, &map_h0(&c));
    ok &= a.passed() && ga.coordinates_ok && ga.star_ok && ga.lipschitz_ok && ha.passed;
    details.push(format!(
        "grid: mult {}/{} gamma {}<={} Lip(g) {}<={}",
        a.multiplicity, a.multiplicity_bound, a.gamma_measured, a.declared.gamma, ga.lipschitz, ga.bound
    ));

    for depth in [3usize, 4] {
        let sp = space(2, depth, depth as i64);
        let m = GraphMetric::new(&sp.complex, 10_000).unwrap();
        let zs: Vec<usize> =
            sp.vertices().iter().filter(|&&v| sp.h(v) == q(0)).map(|&v| m.index_of(v).unwrap()).collect();
        let c = ls_cover(&m, &zs, &q(1), |s| an_cover_product(&sp, &m, s)).unwrap();
        let a = audit_cover(&m, &c);
        let nv = nerve(&c).unwrap();
        let ga = audit_g(&m, &c, &nv).unwrap();
        let ha = audit_h0(&m, &c, &nv, &map_h0(&c));
        ok &= a.passed() && ga.coordinates_ok && ga.star_ok && ga.lipschitz_ok && ha.passed;
        details.push(format!(
            "tree product depth {depth}: {} elements, mult {}/{} gamma {}<={} Lip(g) {}<={}",
            a.elements, a.multiplicity, a.multiplicity_bound, a.gamma_measured, a.declared.gamma, ga.lipschitz, ga.bound
        ));
    }
    let elapsed = start.elapsed();
    report(8, "cover and nerve audit", ok && elapsed < Duration::from_secs(600), elapsed, details.join("; "));
}

#[test]
fn criterion_09_whitney_audit() {
    let start = Instant::now();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for l in [4u64, 8, 16] {
        for k in 0..=2 {
            let a = audit_whitney(&whitney(l, k).unwrap());
            ok &= a.passed();
            worst = worst.max(a.max_ratio);
            count += a.cubes;
        }
    }
    let elapsed = start.elapsed();
    report(
        9,
        "Whitney audit",
        ok && elapsed < Duration::from_secs(60),
        elapsed,
        format!("{count} cubes over 9 boxes, largest interior distance/side {worst:.3}"),
    );
}

#[test]
fn criterion_10_building_geometry() {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();

    // characteristic chambers are exactly the downward link
    for (n, depth) in [(2usize, 4usize), (3, 3)] {
        let sp = space(n, depth, depth as i64);
        let t = &sp.factors[0];
        let ends: Vec<End> = std::iter::once(End::Top).chain(t.level_range(depth).map(End::Leaf)).collect();
        let mut pairs = 0u64;
        for &v in sp.vertices() {
            let link = downward_link(&sp, v);
            let pos = sp.decode(v);
            let mut idx = vec![0usize; n];
            loop {
                let c: Vec<End> = idx.iter().map(|&i| ends[i]).collect();
                ok &= is_characteristic(&sp, &pos, &c) == link.contains(&c);
                pairs += 1;
                let mut i = 0;
                while i < n {
                    idx[i] += 1;
                    if idx[i] < ends.len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        details.push(format!("n{n} d{depth}: {pairs} vertex-chamber pairs"));
    }

    // opposite witness
    let sp = space(2, 4, 4);
    let mut witnessed = 0;
    let mut chambers = 0;
    for &v in sp.vertices() {
        if sp.margin(v) >= 2 {
            let w = opposite_witness(&sp, v, usize::MAX).unwrap();
            ok &= w.failures == 0 && (w.distance - 2f64.sqrt()).abs() < 1e-12;
            witnessed += 1;
            chambers += w.checked;
        }
    }
    let sp3 = space(3, 4, 4);
    let mut deep: Vec<usize> = sp3.vertices().iter().copied().filter(|&v| sp3.margin(v) >= 2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut sampled = 0;
    let mut sampled_vertices = 0;
    while sampled < 1000 && !deep.is_empty() {
        let v = deep.swap_remove(rng.gen_range(0..deep.len()));
        let w = opposite_witness(&sp3, v, 1000 - sampled).unwrap();
        ok &= w.failures == 0 && (w.distance - 3f64.sqrt()).abs() < 1e-12;
        sampled += w.checked;
        sampled_vertices += 1;
    }
    ok &= sampled >= 1000;
    details.push(format!(
        "witness: {witnessed} vertices, {chambers} chambers exhaustive; n3 sampled {sampled} chambers at {sampled_vertices} vertices"
    ));

    // projections to vertical geodesics
    let t = TruncatedTree::new(2, 4).unwrap();
    let nv = t.n_vertices();
    let mut proj_ok = true;
    for leaf in t.level_range(4) {
        let gamma: Vec<usize> = (0..=4).map(|l| t.ancestor_at(leaf, l)).collect();
        for a in 0..nv {
            let pa = project_to_geodesic(&t, leaf, a);
            let dg = gamma.iter().map(|&g| t.distance(a, g)).min().unwrap();
            proj_ok &= t.distance(a, pa) <= 2 * dg;
            for b in 0..nv {
                proj_ok &= t.distance(pa, project_to_geodesic(&t, leaf, b)) <= t.distance(a, b);
            }
        }
    }
    let sp = space(2, 3, 3);
    let leaves: Vec<usize> = sp.factors.iter().map(|t| t.first_leaf_below(0)).collect();
    for &v in sp.vertices() {
        let coords = sp.vertex_coords(v);
        let mut p = coords.clone();
        for (i, &leaf) in leaves.iter().enumerate() {
            p = slice_project(&sp, i, leaf, &p);
        }
        proj_ok &= p.iter().zip(&leaves).enumerate().all(|(i, (&x, &l))| sp.factors[i].is_ancestor_or_self(x, l));
        let again: Vec<usize> = (0..2).fold(p.clone(), |acc, i| slice_project(&sp, i, leaves[i], &acc));
        proj_ok &= again == p;
    }
    ok &= proj_ok;
    details.push(format!("projections exhaustive at depth 4: {proj_ok}"));
    let elapsed = start.elapsed();
    report(10, "building geometry", ok && elapsed < Duration::from_secs(300), elapsed, details.join("; "));
}
