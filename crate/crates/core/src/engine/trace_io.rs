//! Trace export: a compact binary event log for large sweeps and a long-form
//! CSV for dense snapshots.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "SKEV"
//! version u16      1
//! count   u64      number of events
//! events  count * 18 bytes:
//!     tag  u8   0=onset 1=input 2=flip 3=rise 4=fall
//!     tick u64
//!     a    u32  onset: presentation; input: channel; flip/rise/fall: neuron
//!     b    u32  onset: pattern; flip: channel; otherwise 0
//!     c    u8   flip: phase (0 idle, 1 up, 2 down); otherwise 0
//! ```

use std::io::{self, Read, Write};

use super::{Event, TickTrace};
use crate::dendrite::PhaseFlag;

const MAGIC: &[u8; 4] = b"SKEV";
const VERSION: u16 = 1;

fn phase_code(phase: PhaseFlag) -> u8 {
    match phase {
        PhaseFlag::Idle => 0,
        PhaseFlag::RampUp => 1,
        PhaseFlag::RampDown => 2,
    }
}

fn phase_from_code(code: u8) -> io::Result<PhaseFlag> {
    match code {
        0 => Ok(PhaseFlag::Idle),
        1 => Ok(PhaseFlag::RampUp),
        2 => Ok(PhaseFlag::RampDown),
        other => Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("bad phase code {other}"),
        )),
    }
}

impl Event {
    fn encode(&self) -> (u8, u64, u32, u32, u8) {
        match *self {
            Event::Onset { tick, presentation, pattern } => (0, tick, presentation, pattern, 0),
            Event::InputSpike { tick, channel } => (1, tick, channel as u32, 0, 0),
            Event::PhaseFlip { tick, neuron, channel, phase } => {
                (2, tick, neuron as u32, channel as u32, phase_code(phase))
            }
            Event::OutputRise { tick, neuron } => (3, tick, neuron as u32, 0, 0),
            Event::OutputFall { tick, neuron } => (4, tick, neuron as u32, 0, 0),
        }
    }

    fn decode(tag: u8, tick: u64, a: u32, b: u32, c: u8) -> io::Result<Event> {
        Ok(match tag {
            0 => Event::Onset { tick, presentation: a, pattern: b },
            1 => Event::InputSpike { tick, channel: a as u16 },
            2 => Event::PhaseFlip {
                tick,
                neuron: a as u16,
                channel: b as u16,
                phase: phase_from_code(c)?,
            },
            3 => Event::OutputRise { tick, neuron: a as u16 },
            4 => Event::OutputFall { tick, neuron: a as u16 },
            other => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("bad event tag {other}"),
                ))
            }
        })
    }
}

/// Write the event log in the fixed binary layout above.
pub fn write_events_binary(events: &[Event], mut w: impl Write) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(events.len() as u64).to_le_bytes())?;
    for event in events {
        let (tag, tick, a, b, c) = event.encode();
        w.write_all(&[tag])?;
        w.write_all(&tick.to_le_bytes())?;
        w.write_all(&a.to_le_bytes())?;
        w.write_all(&b.to_le_bytes())?;
        w.write_all(&[c])?;
    }
    Ok(())
}

/// Read an event log written by [`write_events_binary`].
pub fn read_events_binary(mut r: impl Read) -> io::Result<Vec<Event>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut version = [0u8; 2];
    r.read_exact(&mut version)?;
    if u16::from_le_bytes(version) != VERSION {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unsupported version"));
    }
    let mut count = [0u8; 8];
    r.read_exact(&mut count)?;
    let count = u64::from_le_bytes(count);
    let mut events = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let mut rec = [0u8; 18];
        r.read_exact(&mut rec)?;
        let tag = rec[0];
        let tick = u64::from_le_bytes(rec[1..9].try_into().unwrap());
        let a = u32::from_le_bytes(rec[9..13].try_into().unwrap());
        let b = u32::from_le_bytes(rec[13..17].try_into().unwrap());
        let c = rec[17];
        events.push(Event::decode(tag, tick, a, b, c)?);
    }
    Ok(events)
}

impl TickTrace {
    /// Long-form CSV of the dense snapshots:
    /// `tick,entity,variable,value` with entities `net`, `n<i>` and
    /// `n<i>k<j>`.
    pub fn write_dense_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "tick,entity,variable,value")?;
        for row in &self.dense {
            let t = row.tick;
            writeln!(w, "{t},net,inh,{}", row.state.inhibition)?;
            for (n, neuron) in row.state.neurons.iter().enumerate() {
                writeln!(w, "{t},n{n},theta,{}", neuron.threshold)?;
                writeln!(w, "{t},n{n},s,{}", neuron.spiking as u8)?;
                writeln!(w, "{t},n{n},membrane,{}", neuron.membrane())?;
                for (ch, kernel) in neuron.kernels.iter().enumerate() {
                    writeln!(w, "{t},n{n}k{ch},r,{}", kernel.level)?;
                    writeln!(w, "{t},n{n}k{ch},dr,{}", kernel.step)?;
                    writeln!(w, "{t},n{n}k{ch},p,{}", kernel.phase.sign())?;
                }
            }
        }
        Ok(())
    }

    /// Write the sparse event log; see the module docs for the layout.
    pub fn write_events_binary(&self, w: impl Write) -> io::Result<()> {
        write_events_binary(&self.events, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let events = vec![
            Event::Onset { tick: 0, presentation: 0, pattern: 3 },
            Event::InputSpike { tick: 5, channel: 2 },
            Event::PhaseFlip { tick: 6, neuron: 1, channel: 2, phase: PhaseFlag::RampUp },
            Event::OutputRise { tick: 40, neuron: 0 },
            Event::OutputFall { tick: 43, neuron: 0 },
            Event::PhaseFlip { tick: 90, neuron: 1, channel: 2, phase: PhaseFlag::Idle },
        ];
        let mut buf = Vec::new();
        write_events_binary(&events, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SKEV");
        assert_eq!(buf.len(), 4 + 2 + 8 + events.len() * 18);
        let back = read_events_binary(buf.as_slice()).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = b"NOPE\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00".to_vec();
        assert!(read_events_binary(buf.as_slice()).is_err());
    }
}
