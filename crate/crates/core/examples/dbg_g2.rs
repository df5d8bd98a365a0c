use std::time::Instant;
use uniconn::connection::{build_hyperelliptic_connection, compute_st_identities, StOutcome};
use uniconn::fuchsian::whittaker_z;
use uniconn::jets::{build_relations, eliminate, ElimOptions};
use uniconn::rational::q_i64;

fn main() {
    let t0 = Instant::now();
    let q = whittaker_z(2).unwrap();
    let c = q.curve().unwrap().clone();
    let conn = build_hyperelliptic_connection(&c, &[q_i64(1), q_i64(0)]).unwrap();
    let StOutcome::Identities(st) = compute_st_identities(&conn, &q, None).unwrap() else { panic!() };
    println!("[{:?}] ST done", t0.elapsed());
    let rel = build_relations(&st.s, &st.t, Some(&c), "z").unwrap();
    println!("[{:?}] relations: deg_z P1 = {}, deg_z P2 = {}, terms {} / {}",
        t0.elapsed(), rel.p1.degree("z"), rel.p2.degree("z"), rel.p1.num_terms(), rel.p2.num_terms());
    let ode = eliminate(&rel, &ElimOptions::default()).unwrap();
    println!("[{:?}] eliminate done", t0.elapsed());
    println!("terms: {}, total degree: {}, weighted: {}", ode.xi.num_terms(), ode.xi.total_degree(), ode.weighted_degree());
    for l in &ode.elimination_log { println!("log: {l}"); }
}
