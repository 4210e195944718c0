use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// OFDM symbol kinds within a TDD slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolType {
    UlPilot,
    UlData,
    DlPilot,
    DlData,
    Guard,
}

impl SymbolType {
    pub const ALL: [SymbolType; 5] = [
        SymbolType::UlPilot,
        SymbolType::UlData,
        SymbolType::DlPilot,
        SymbolType::DlData,
        SymbolType::Guard,
    ];

    pub fn letter(self) -> char {
        match self {
            SymbolType::UlPilot => 'P',
            SymbolType::UlData => 'U',
            SymbolType::DlPilot => 'p',
            SymbolType::DlData => 'D',
            SymbolType::Guard => 'G',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        SymbolType::ALL.into_iter().find(|s| s.letter() == c)
    }

    pub fn is_uplink(self) -> bool {
        matches!(self, SymbolType::UlPilot | SymbolType::UlData)
    }

    pub fn is_downlink(self) -> bool {
        matches!(self, SymbolType::DlPilot | SymbolType::DlData)
    }
}

/// Ordered symbol schedule of one radio frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSchedule {
    symbols: Vec<SymbolType>,
    slot_len: usize,
    slots_per_subframe: usize,
    subframes: usize,
}

/// Gap between the end of a UL pilot and the first following DL symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnaroundWindow {
    pub pilot_index: usize,
    pub dl_index: usize,
    /// Whole symbols strictly between the two.
    pub symbols: usize,
}

impl FrameSchedule {
    pub fn new(
        symbols: Vec<SymbolType>,
        slot_len: usize,
        slots_per_subframe: usize,
        subframes: usize,
    ) -> Result<Self> {
        let expected = slot_len * slots_per_subframe * subframes;
        if symbols.len() != expected || expected == 0 {
            return Err(Error::InvalidSchedule(format!(
                "{} symbols for {subframes} subframes x {slots_per_subframe} slots x {slot_len}",
                symbols.len()
            )));
        }
        Ok(FrameSchedule {
            symbols,
            slot_len,
            slots_per_subframe,
            subframes,
        })
    }

    pub fn symbols(&self) -> &[SymbolType] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn slot_len(&self) -> usize {
        self.slot_len
    }

    pub fn slots_per_subframe(&self) -> usize {
        self.slots_per_subframe
    }

    pub fn subframes(&self) -> usize {
        self.subframes
    }

    pub fn count(&self, kind: SymbolType) -> usize {
        self.symbols.iter().filter(|&&s| s == kind).count()
    }

    /// Checks guard separation on every UL/DL direction change and that each
    /// DL data symbol follows some UL pilot.
    pub fn check(&self) -> Result<()> {
        let mut last_direction: Option<(bool, usize)> = None; // (is_uplink, index)
        let mut seen_pilot = false;
        for (i, &s) in self.symbols.iter().enumerate() {
            if s == SymbolType::UlPilot {
                seen_pilot = true;
            }
            if s == SymbolType::DlData && !seen_pilot {
                return Err(Error::InvalidSchedule(format!(
                    "DL data at symbol {i} precedes every UL pilot"
                )));
            }
            if s == SymbolType::Guard {
                last_direction = None;
                continue;
            }
            let up = s.is_uplink();
            if let Some((prev_up, prev)) = last_direction {
                if prev_up != up {
                    return Err(Error::InvalidSchedule(format!(
                        "direction change between symbols {prev} and {i} without a guard"
                    )));
                }
            }
            last_direction = Some((up, i));
        }
        Ok(())
    }

    /// Smallest number of symbols between consecutive UL pilots.
    pub fn pilot_spacing_symbols(&self) -> Option<usize> {
        let pilots: Vec<usize> = self
            .symbols
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == SymbolType::UlPilot)
            .map(|(i, _)| i)
            .collect();
        pilots.windows(2).map(|w| w[1] - w[0] - 1).min()
    }

    /// For every UL pilot, the window to the first DL symbol after it that
    /// comes before the next UL pilot.
    pub fn turnaround_windows(&self) -> Vec<TurnaroundWindow> {
        let mut out = Vec::new();
        for (i, &s) in self.symbols.iter().enumerate() {
            if s != SymbolType::UlPilot {
                continue;
            }
            for (j, &t) in self.symbols.iter().enumerate().skip(i + 1) {
                if t == SymbolType::UlPilot {
                    break;
                }
                if t.is_downlink() {
                    out.push(TurnaroundWindow {
                        pilot_index: i,
                        dl_index: j,
                        symbols: j - i - 1,
                    });
                    break;
                }
            }
        }
        out
    }
}

impl fmt::Display for FrameSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{}", s.letter())?;
        }
        Ok(())
    }
}

/// Parses one letter per symbol (`P` UL pilot, `U` UL data, `p` DL pilot,
/// `D` DL data, `G` guard). Whitespace is ignored; the result is a single
/// slot covering the whole string.
impl FromStr for FrameSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                SymbolType::from_letter(c)
                    .ok_or_else(|| Error::InvalidSchedule(format!("unknown symbol letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = symbols.len();
        FrameSchedule::new(symbols, n, 1, 1)
    }
}

/// Default 10 ms frame: 10 subframes of 2 slots of 7 symbols. Subframe 0
/// carries control and is idle from the data path's view; the slots of
/// subframe 1 start their DL part with a DL pilot.
pub fn default_frame() -> FrameSchedule {
    use SymbolType::*;
    let control = [Guard; 7];
    let pilot_slot = [UlPilot, UlData, UlData, Guard, DlPilot, DlData, Guard];
    let data_slot = [UlPilot, UlData, UlData, Guard, DlData, DlData, Guard];

    let mut symbols = Vec::with_capacity(140);
    for subframe in 0..10 {
        for _slot in 0..2 {
            let slot: &[SymbolType] = match subframe {
                0 => &control,
                1 => &pilot_slot,
                _ => &data_slot,
            };
            symbols.extend_from_slice(slot);
        }
    }
    FrameSchedule::new(symbols, 7, 2, 10).expect("140 symbols")
}
