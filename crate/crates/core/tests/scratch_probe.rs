use influence_rl::depmeasures::Measure;
use influence_rl::harness::*;

fn curve(spec_text: &str) -> DetectionCurve {
    let spec = ExperimentSpec::parse(spec_text).unwrap();
    run_detection_experiment(&spec).unwrap()
}

fn dump(label: &str, curve: &DetectionCurve) {
    println!("== {label}");
    for s in curve.sample_points() {
        let rates: Vec<String> = Measure::ALL
            .iter()
            .map(|&m| {
                curve
                    .rate_at(s, m)
                    .map(|r| format!("{}={:.2}", m.name(), r))
                    .unwrap_or_default()
            })
            .collect();
        println!("  n={s:<6} {}", rates.join(" "));
    }
}

#[test]
#[ignore]
fn probe_box() {
    let c = curve(
        "scenario = box\nruns = 100\nmode = random\ngrid = 5 10 15 20 30 40 60 80 100\n\
         target = robotA\nsource = robotB\ncomponent = direction\nseed_base = 1000\n",
    );
    dump("box (notional comparator)", &c);
}

#[test]
#[ignore]
fn probe_saw() {
    let uncond = curve(
        "scenario = saw\nruns = 100\nmode = random\ngrid = 5 10 15 20 30 40 60 80 100\n\
         target = robotA\nsource = robotB\ncomponent = direction\nseed_base = 2000\n",
    );
    dump("saw unconditioned", &uncond);
    let cond = curve(
        "scenario = saw\nruns = 100\nmode = random\ngrid = 5 10 15 20 30 40 60 80 100\n\
         target = robotA\nsource = robotB\ncomponent = direction\nseed_base = 2000\n\
         conditioning = own\n",
    );
    dump("saw conditioned on own", &cond);
}

#[test]
#[ignore]
fn probe_scn1() {
    for comp in ["pan", "tilt", "zoom"] {
        let c = curve(&format!(
            "scenario = scn1\nruns = 10\nmode = random\ngrid = 100 250 500 1000\n\
             target = camera1\nsource = camera2\nrival = camera3\ncomponent = {comp}\n\
             seed_base = 3000\n"
        ));
        dump(&format!("scn1 {comp} (rival camera3)"), &c);
    }
}

#[test]
#[ignore]
fn probe_scn2() {
    for comp in ["pan", "tilt", "zoom"] {
        let uncond = curve(&format!(
            "scenario = scn2\nruns = 10\nmode = random\ngrid = 500 1000 2000\n\
             target = camera1\nsource = camera2\nrival = camera3\ncomponent = {comp}\n\
             seed_base = 4000\n"
        ));
        dump(&format!("scn2 {comp} unconditioned"), &uncond);
        let cond = curve(&format!(
            "scenario = scn2\nruns = 10\nmode = random\ngrid = 500 1000 2000\n\
             target = camera1\nsource = camera2\nrival = camera3\ncomponent = {comp}\n\
             seed_base = 4000\nconditioning = own_and_source_peers\n"
        ));
        dump(&format!("scn2 {comp} conditioned 2^5"), &cond);
    }
}
