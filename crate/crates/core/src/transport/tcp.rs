use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{Envelope, Header, Link, PartyId, SimMeta};
use crate::error::{Error, Result};

/// Socket link: length-prefixed envelopes over TCP, one reader thread per peer.
pub struct TcpLink {
    me: PartyId,
    writers: [Option<TcpStream>; 4],
    inbox: [Option<Receiver<Envelope>>; 4],
    bytes: u64,
}

fn read_frame(s: &mut TcpStream) -> std::io::Result<Envelope> {
    let mut h = [0u8; Header::SIZE];
    s.read_exact(&mut h)?;
    let h = Header::decode(&h);
    let mut payload = vec![0u8; h.len as usize];
    s.read_exact(&mut payload)?;
    Ok(Envelope { tag: h.tag, seq: h.seq, payload, meta: SimMeta::default() })
}

fn spawn_reader(mut s: TcpStream) -> Receiver<Envelope> {
    let (tx, rx) = channel();
    thread::spawn(move || {
        while let Ok(env) = read_frame(&mut s) {
            if tx.send(env).is_err() {
                break;
            }
        }
    });
    rx
}

/// Connects party `me` to its peers. Lower-indexed peers are dialed, higher
/// ones accepted on `listener`; the dialer announces its index in one byte.
pub fn tcp_connect(me: PartyId, listener: TcpListener, peers: &[SocketAddr; 4], timeout: Duration) -> Result<TcpLink> {
    let err = |msg: String| Error::Transport { party: me, msg };
    let mut streams: [Option<TcpStream>; 4] = Default::default();
    let deadline = Instant::now() + timeout;
    for j in 0..me.index() {
        let s = loop {
            match TcpStream::connect(peers[j]) {
                Ok(s) => break s,
                Err(e) if Instant::now() < deadline => {
                    let _ = e;
                    thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(err(format!("connect to P{j} at {}: {e}", peers[j]))),
            }
        };
        s.set_nodelay(true)?;
        (&s).write_all(&[me.index() as u8])?;
        streams[j] = Some(s);
    }
    listener.set_nonblocking(true)?;
    let mut pending = 3 - me.index();
    while pending > 0 {
        match listener.accept() {
            Ok((s, _)) => {
                s.set_nonblocking(false)?;
                s.set_nodelay(true)?;
                let mut id = [0u8; 1];
                (&s).read_exact(&mut id)?;
                let j = id[0] as usize;
                if j <= me.index() || j > 3 || streams[j].is_some() {
                    return Err(err(format!("unexpected handshake from party index {j}")));
                }
                streams[j] = Some(s);
                pending -= 1;
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() > deadline {
                    return Err(err("timed out waiting for peers to connect".into()));
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut link = TcpLink { me, writers: Default::default(), inbox: Default::default(), bytes: 0 };
    for (j, s) in streams.into_iter().enumerate() {
        if let Some(s) = s {
            link.inbox[j] = Some(spawn_reader(s.try_clone()?));
            link.writers[j] = Some(s);
        }
    }
    Ok(link)
}

/// Four connected socket links over loopback (ephemeral ports).
pub fn tcp_links_local(timeout: Duration) -> Result<[TcpLink; 4]> {
    let listeners: Vec<TcpListener> =
        (0..4).map(|_| TcpListener::bind("127.0.0.1:0")).collect::<std::io::Result<_>>()?;
    let addrs: Vec<SocketAddr> = listeners.iter().map(|l| l.local_addr()).collect::<std::io::Result<_>>()?;
    let addrs: [SocketAddr; 4] = addrs.try_into().unwrap();
    let handles: Vec<_> = listeners
        .into_iter()
        .enumerate()
        .map(|(i, l)| thread::spawn(move || tcp_connect(PartyId::ALL[i], l, &addrs, timeout)))
        .collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.join().map_err(|_| Error::Panic("tcp setup thread".into()))??);
    }
    Ok(out.try_into().ok().unwrap())
}

impl Link for TcpLink {
    fn send(&mut self, to: PartyId, env: Envelope) -> Result<()> {
        let me = self.me;
        let w =
            self.writers[to.index()].as_mut().ok_or_else(|| Error::Parameter(format!("{me} has no socket to {to}")))?;
        let mut frame = Vec::with_capacity(Header::SIZE + env.payload.len());
        frame.extend_from_slice(&env.header().encode());
        frame.extend_from_slice(&env.payload);
        w.write_all(&frame).map_err(|e| Error::Transport { party: me, msg: format!("send to {to}: {e}") })?;
        self.bytes += frame.len() as u64;
        Ok(())
    }

    fn recv(&mut self, from: PartyId, timeout: Duration) -> Result<Option<Envelope>> {
        let rx = self.inbox[from.index()]
            .as_ref()
            .ok_or_else(|| Error::Parameter(format!("{} has no socket from {from}", self.me)))?;
        match rx.recv_timeout(timeout) {
            Ok(e) => Ok(Some(e)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Transport { party: self.me, msg: format!("peer {from} closed the connection") })
            }
        }
    }

    fn channel_bytes(&self) -> u64 {
        self.bytes
    }

    fn simulated(&self) -> bool {
        false
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        for w in self.writers.iter().flatten() {
            let _ = w.shutdown(std::net::Shutdown::Write);
        }
    }
}
