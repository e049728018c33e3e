//! Carries frames over local UDP when the two cubes run as separate
//! processes. No loss or latency is simulated here.

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::Duration;

use super::{Frame, FrameError, FRAME_LEN};

pub struct UdpFrameSocket {
    socket: UdpSocket,
}

impl UdpFrameSocket {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Self {
            socket: UdpSocket::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.socket.set_read_timeout(t)
    }

    pub fn send_to(&self, bytes: &[u8; FRAME_LEN], peer: SocketAddr) -> io::Result<()> {
        self.socket.send_to(bytes, peer).map(|_| ())
    }

    /// Waits for one datagram. The outer error is transport failure; the
    /// inner one rejects a malformed frame.
    pub fn recv(&self) -> io::Result<Result<Frame, FrameError>> {
        // One spare byte so oversized datagrams show up as BadLength.
        let mut buf = [0u8; FRAME_LEN + 1];
        let (n, _) = self.socket.recv_from(&mut buf)?;
        Ok(Frame::decode(&buf[..n]))
    }
}
