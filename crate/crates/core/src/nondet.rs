//! Names for nondeterministic choices.
//!
//! A choice is identified by the syntactic site that makes it together with
//! the dynamic context (call sites and loop iterations) it was made in. The
//! concrete interpreter and the SSA builder compute identical keys, so a
//! satisfying assignment can be replayed concretely.

use std::collections::HashMap;
use std::fmt;

use crate::bits::mask;
use crate::lang::tast::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Frame {
    Call(NodeId),
    /// Loop id and iteration number.
    Iter(NodeId, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NondetKey {
    pub frames: Vec<Frame>,
    pub site: NodeId,
    pub index: u32,
    pub width: u32,
}

impl NondetKey {
    /// The same key as seen from inside the first frame.
    pub fn strip_first(&self) -> Option<NondetKey> {
        if self.frames.is_empty() {
            return None;
        }
        Some(NondetKey {
            frames: self.frames[1..].to_vec(),
            ..self.clone()
        })
    }
}

impl fmt::Display for NondetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fr in &self.frames {
            match fr {
                Frame::Call(id) => write!(f, "c{}/", id)?,
                Frame::Iter(l, i) => write!(f, "l{}.{}/", l, i)?,
            }
        }
        write!(f, "s{}.{}:{}", self.site, self.index, self.width)
    }
}

/// Enter iteration `i` of `loop_id`: replaces the frame of the previous
/// iteration of the same loop, otherwise pushes. Returns what to restore.
pub fn enter_iteration(frames: &mut Vec<Frame>, loop_id: NodeId, i: u32) -> Option<Frame> {
    match frames.last().copied() {
        Some(old @ Frame::Iter(l, _)) if l == loop_id => {
            *frames.last_mut().unwrap() = Frame::Iter(loop_id, i);
            Some(old)
        }
        _ => {
            frames.push(Frame::Iter(loop_id, i));
            None
        }
    }
}

pub fn leave_iteration(frames: &mut Vec<Frame>, restore: Option<Frame>) {
    match restore {
        Some(f) => *frames.last_mut().unwrap() = f,
        None => {
            frames.pop();
        }
    }
}

pub trait NondetSource {
    fn choose(&mut self, key: &NondetKey) -> u64;
}

/// Every choice is zero.
pub struct ZeroSource;

impl NondetSource for ZeroSource {
    fn choose(&mut self, _: &NondetKey) -> u64 {
        0
    }
}

/// Choices looked up by key; absent keys read as zero and are recorded.
#[derive(Clone, Debug, Default)]
pub struct MapSource {
    pub map: HashMap<NondetKey, u64>,
    pub missing: Vec<NondetKey>,
}

impl MapSource {
    pub fn new(map: HashMap<NondetKey, u64>) -> Self {
        MapSource {
            map,
            missing: Vec::new(),
        }
    }
}

impl NondetSource for MapSource {
    fn choose(&mut self, key: &NondetKey) -> u64 {
        match self.map.get(key) {
            Some(v) => *v & mask(key.width),
            None => {
                self.missing.push(key.clone());
                0
            }
        }
    }
}

/// Choices taken in demand order from a caller-supplied stream (zero once
/// the stream runs dry).
pub struct StreamSource<I: Iterator<Item = u64>> {
    pub values: I,
}

impl<I: Iterator<Item = u64>> NondetSource for StreamSource<I> {
    fn choose(&mut self, key: &NondetKey) -> u64 {
        self.values.next().unwrap_or(0) & mask(key.width)
    }
}

/// Wraps a source and records every demand with the value handed out.
pub struct Recording<'a> {
    pub inner: &'a mut dyn NondetSource,
    pub log: Vec<(NondetKey, u64)>,
}

impl NondetSource for Recording<'_> {
    fn choose(&mut self, key: &NondetKey) -> u64 {
        let v = self.inner.choose(key);
        self.log.push((key.clone(), v));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_frames_replace() {
        let mut fr = vec![Frame::Call(1)];
        let r0 = enter_iteration(&mut fr, 7, 0);
        assert_eq!(fr, [Frame::Call(1), Frame::Iter(7, 0)]);
        let r1 = enter_iteration(&mut fr, 7, 1);
        assert_eq!(fr, [Frame::Call(1), Frame::Iter(7, 1)]);
        leave_iteration(&mut fr, r1);
        assert_eq!(fr, [Frame::Call(1), Frame::Iter(7, 0)]);
        leave_iteration(&mut fr, r0);
        assert_eq!(fr, [Frame::Call(1)]);
    }

    #[test]
    fn map_source_masks_and_records() {
        let k = NondetKey {
            frames: vec![],
            site: 3,
            index: 0,
            width: 8,
        };
        let mut m = MapSource::new(HashMap::from([(k.clone(), 0x1ff)]));
        assert_eq!(m.choose(&k), 0xff);
        let k2 = NondetKey { site: 4, ..k };
        assert_eq!(m.choose(&k2), 0);
        assert_eq!(m.missing, vec![k2]);
    }
}
