use wrapgraph::corpus::*;
use wrapgraph::layout::*;
use wrapgraph::Geometry;
fn main() {
    for p in CorpusPreset::ALL { for seed in 0..20u64 {
        let g = p.spec(seed).generate().unwrap();
        let diam = (0..g.node_count()).map(|s| g.bfs(s).iter().map(|d| d.unwrap()).max().unwrap()).max().unwrap();
        for geom in Geometry::ALL {
            let ideal = ideal_distances(&g, geom).unwrap();
            let base = run_sgd(&g, geom, &SgdSchedule::for_ideal(&ideal, 60, seed)).unwrap();
            let red = 1.0-base.final_stress/base.initial_stress;
            if red < 0.5 {
                let r = run_sgd(&g, geom, &SgdSchedule::for_ideal(&ideal, 1000, seed)).unwrap();
                println!("{} seed {seed} diam {diam} {:?}: {:.1}% (1000 iter {:.1}%)", p.name(), geom, 100.0*red, 100.0*(1.0-r.final_stress/r.initial_stress));
            }
        }
    }}
}
