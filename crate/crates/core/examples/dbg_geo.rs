use h2xr::meshdom::*;
use h2xr::graphsolve::*;
use h2xr::surfgeo::*;
use h2xr::hypgeom::*;
fn main() {
    let spec = WedgeSpec::new(2, 0.5f64, 0.15, 0.2).unwrap();
    let mesh = build_wedge(&spec).unwrap();
    let cfg = SolverConfig { cap: 1.0, ..Default::default() };
    let (u, _) = solve_capped(&mesh, &cfg, None).unwrap();
    let imm = immerse(&mesh, &u).unwrap();
    let f0 = geometry(&imm).unwrap();
    let gamma = geodesic_through(DiskPoint::new(0.3, 0.1), DiskPoint::new(-0.4, 0.2)).unwrap();
    for (name, iso) in [
        ("rot_vert", Generator::RotationAboutVertical { p: DiskPoint::new(0.2, -0.1), angle: 1.3 }.isometry().unwrap()),
        ("rot_horiz", Generator::RotationAboutHorizontal { g: gamma, t0: 0.4 }.isometry().unwrap()),
        ("mirror_slice", Generator::MirrorSlice { t0: 0.0 }.isometry().unwrap()),
    ] {
        let moved = imm.transformed(&iso).unwrap();
        let maxnorm = moved.positions.iter().map(|p| p.p.norm_sq().sqrt()).fold(0.0f64, f64::max);
        let f1 = geometry(&moved).unwrap();
        let mut worst = 0.0f64; let mut worst_t = 0;
        for t in 0..imm.triangles.len() {
            let d = (f0.k[t] - f1.k[t]).abs();
            if d > worst { worst = d; worst_t = t; }
        }
        println!("{name}: max|z|={maxnorm:.6} worst dK={worst:.3e} at tri {worst_t} (K0={}, K1={})",
                 f0.k[worst_t], f1.k[worst_t]);
        if worst > 1e-3 {
            let tv = imm.triangles[worst_t];
            for &v in &tv {
                let p = moved.positions[v as usize];
                println!("   moved vert ({:.8}, {:.8}, {:.4})", p.p.x, p.p.y, p.t);
            }
        }
    }
}
