//! Invader behind a free boundary, resident on the whole half line.
use compfront::free_boundary::{simulate_single, FrontResolution};
use compfront::{CompetitionParams, InitialData, InitialShape, PeriodicField};

fn main() -> compfront::Result<()> {
    let one = PeriodicField::constant(1.0, 1.0);
    let params = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 4.0);
    let init = InitialData {
        u0: InitialShape::Bump { amplitude: 1.0 },
        v0: InitialShape::Plateau {
            amplitude: 1.0,
            width: 1.0,
        },
    };
    let res = FrontResolution {
        nx: 256,
        ..Default::default()
    };
    let tr = simulate_single(&one, &one, &params, &init, 60.0, 80.0, res)?;
    let snap = tr.snapshots.last().unwrap();
    println!("s(60) = {:.4}", tr.final_s());
    for x in [2.0, 10.0, tr.final_s() - 1.0, tr.final_s() + 5.0, 70.0] {
        println!("x = {x:7.3}: u = {:.4}, v = {:.4}", tr.u_at(snap, x), tr.v_at(snap, x));
    }
    Ok(())
}
