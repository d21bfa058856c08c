use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::{Envelope, Link, PartyId};
use crate::error::{Error, Result};

/// In-process link built on channels; carries simulation metadata.
pub struct SimLink {
    me: PartyId,
    to: [Option<Sender<Envelope>>; 4],
    from: [Option<Receiver<Envelope>>; 4],
    bytes: u64,
}

/// Builds four fully connected in-process links.
pub fn sim_links() -> [SimLink; 4] {
    let mut links: [SimLink; 4] =
        PartyId::ALL.map(|me| SimLink { me, to: Default::default(), from: Default::default(), bytes: 0 });
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                let (tx, rx) = channel();
                links[a].to[b] = Some(tx);
                links[b].from[a] = Some(rx);
            }
        }
    }
    links
}

impl Link for SimLink {
    fn send(&mut self, to: PartyId, env: Envelope) -> Result<()> {
        self.bytes += (super::Header::SIZE + env.payload.len()) as u64;
        let tx = self.to[to.index()]
            .as_ref()
            .ok_or_else(|| Error::Parameter(format!("{} cannot send to itself", self.me)))?;
        tx.send(env).map_err(|_| Error::Transport { party: self.me, msg: format!("peer {to} disconnected") })
    }

    fn recv(&mut self, from: PartyId, timeout: Duration) -> Result<Option<Envelope>> {
        let rx = self.from[from.index()]
            .as_ref()
            .ok_or_else(|| Error::Parameter(format!("{} cannot receive from itself", self.me)))?;
        match rx.recv_timeout(timeout) {
            Ok(e) => Ok(Some(e)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Transport { party: self.me, msg: format!("peer {from} disconnected") })
            }
        }
    }

    fn channel_bytes(&self) -> u64 {
        self.bytes
    }

    fn simulated(&self) -> bool {
        true
    }
}
