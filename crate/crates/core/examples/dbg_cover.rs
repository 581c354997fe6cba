// temp debug: dump cover behavior for the plane graph
use hcalc_core::domain::DomainBox;
use hcalc_core::measure::{premeasure_estimate, CoverOpts, MeasureFamily, MeasureKind, SetSampler};
use hcalc_core::split::{GraphFunction, Splitting};

fn main() {
    let s = Splitting::new(1, 1).unwrap();
    let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let phi = GraphFunction::constant(s, &[0.0], dom).unwrap();
    let sampler = SetSampler::Graph(phi);
    let fam = MeasureFamily::new(MeasureKind::Spherical, 3.0).unwrap();
    let est = premeasure_estimate(&sampler, fam, 0.1, &CoverOpts::default()).unwrap();
    println!("value {} cover_size {} samples {}", est.value, est.cover_size, est.samples_used);
    let mut ys: Vec<f64> = est.cover.iter().map(|e| e.center[1]).collect();
    ys.sort_by(|a,b| a.total_cmp(b));
    ys.dedup_by(|a,b| (*a - *b).abs() < 1e-9);
    println!("distinct y centers: {} -> {:?}", ys.len(), &ys[..ys.len().min(15)]);
    let mut xs: Vec<f64> = est.cover.iter().map(|e| e.center[0]).collect();
    xs.sort_by(|a,b| a.total_cmp(b));
    xs.dedup_by(|a,b| (*a - *b).abs() < 1e-9);
    println!("distinct x centers: {:?}", xs);
    // per y-column ball count
    let mut col0: Vec<f64> = est.cover.iter().filter(|e| (e.center[1]-ys[0]).abs()<1e-9).map(|e| e.center[2]).collect();
    col0.sort_by(|a,b| a.total_cmp(b));
    println!("balls in first y-column: {} t gaps: {:?}", col0.len(), col0.windows(2).take(8).map(|w| w[1]-w[0]).collect::<Vec<_>>());
}
