use outfr::freegroup::FreeAutomorphism;
use outfr::trainfold::{find_train_track, TrainTrackOutcome};
use outfr::whitehead::{rotationless_data, taken_turns, whitehead_graphs};

fn vm_peak() -> String {
    let s = std::fs::read_to_string("/proc/self/status").unwrap();
    s.lines()
        .filter(|l| l.starts_with("VmPeak") || l.starts_with("VmRSS"))
        .collect::<Vec<_>>()
        .join("  ")
}

fn main() {
    let phi = FreeAutomorphism::from_strings(3, &["Cba", "CbACA", "aca"], false).unwrap();
    let tt = find_train_track(&phi, 200);
    let TrainTrackOutcome::TrainTrack { map, lambda } = tt.outcome else {
        panic!("no tt");
    };
    println!("tt ok, lambda {lambda}  {}", vm_peak());
    let data = rotationless_data(&map);
    println!("power {}  {}", data.power, vm_peak());
    let h = map.power(data.power);
    let total: usize = (0..h.graph().n_edges()).map(|e| h.edge_image(e).len()).sum();
    println!("power map total image halves {total}  {}", vm_peak());
    let closure = taken_turns(&h);
    println!("closure {} turns  {}", closure.turns.len(), vm_peak());
    let wg = whitehead_graphs(&map);
    println!("wg stable at {:?}  {}", wg.stable.keys().collect::<Vec<_>>(), vm_peak());
}
