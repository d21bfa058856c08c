use std::time::{Duration, Instant};

use quadmpc::{run_session, Error, PartyId, SessionConfig, Z64};

fn cfg(ms: u64) -> SessionConfig {
    SessionConfig { watchdog: Duration::from_millis(ms), ..SessionConfig::with_seed(1) }
}

#[test]
fn missing_message_trips_the_watchdog() {
    let start = Instant::now();
    let err = run_session(&cfg(200), |p| {
        match p.id() {
            PartyId::P0 => {
                p.recv_ring(PartyId::P1, 1)?;
            }
            PartyId::P1 => std::thread::sleep(Duration::from_millis(800)),
            _ => {}
        }
        Ok(())
    })
    .unwrap_err();
    assert!(matches!(err, Error::Watchdog { party: PartyId::P0, from: PartyId::P1, .. }), "{err}");
    assert!(err.to_string().contains("recv(from=P1"), "{err}");
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn length_mismatch_is_a_desync() {
    let err = run_session(&cfg(2000), |p| {
        match p.id() {
            PartyId::P0 => p.send_ring(PartyId::P1, &[Z64(1), Z64(2), Z64(3)])?,
            PartyId::P1 => {
                p.recv_ring(PartyId::P0, 2)?;
            }
            _ => {}
        }
        Ok(())
    })
    .unwrap_err();
    assert!(matches!(err, Error::Desync { party: PartyId::P1, from: PartyId::P0, .. }), "{err}");
}

#[test]
fn departed_peer_fails_fast() {
    let start = Instant::now();
    let err = run_session(&cfg(30_000), |p| {
        if p.id() == PartyId::P0 {
            p.recv_ring(PartyId::P1, 1)?;
        }
        Ok(())
    })
    .unwrap_err();
    assert!(matches!(err, Error::Transport { party: PartyId::P0, .. }), "{err}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn mismatched_programs_do_not_hang() {
    let err = run_session(&cfg(300), |p| {
        if p.index() < 2 {
            quadmpc::protocols::linear::mult_vec(p, &[], &[])?;
            p.recv_ring(PartyId::P2, 1)?;
        }
        Ok(())
    })
    .unwrap_err();
    assert!(matches!(err, Error::Watchdog { .. } | Error::Desync { .. } | Error::Transport { .. }), "{err}");
}
