use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape of the initial density on one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile<T> {
    Constant(T),
    /// `offset + amplitude * sin(frequency * x)`
    Sine {
        offset: T,
        amplitude: T,
        frequency: T,
    },
}

impl<T: Scalar> Profile<T> {
    pub fn value(&self, x: T) -> T {
        match *self {
            Profile::Constant(c) => c,
            Profile::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (frequency * x).sin(),
        }
    }

    /// An antiderivative (up to a constant).
    fn primitive(&self, x: T) -> T {
        match *self {
            Profile::Constant(c) => c * x,
            Profile::Sine {
                offset,
                amplitude,
                frequency,
            } => {
                if frequency == T::zero() {
                    offset * x
                } else {
                    offset * x - amplitude / frequency * (frequency * x).cos()
                }
            }
        }
    }

    /// Infimum and supremum over `[a, b]` (either end may be infinite).
    fn range_on(&self, a: T, b: T) -> (T, T) {
        match *self {
            Profile::Constant(c) => (c, c),
            Profile::Sine {
                offset,
                amplitude,
                frequency,
            } => {
                let full = (offset - amplitude.abs(), offset + amplitude.abs());
                if frequency == T::zero() || amplitude == T::zero() {
                    return (offset, offset);
                }
                if !a.is_finite()
                    || !b.is_finite()
                    || (b - a) * frequency.abs() >= T::PI() + T::PI()
                {
                    return full;
                }
                let mut lo = self.value(a).min(self.value(b));
                let mut hi = self.value(a).max(self.value(b));
                // sin extrema sit at w x = pi/2 + k pi
                let (pa, pb) = {
                    let (u, v) = (frequency * a, frequency * b);
                    (u.min(v), u.max(v))
                };
                let half_pi = T::FRAC_PI_2();
                let mut k = ((pa - half_pi) / T::PI()).ceil();
                loop {
                    let phase = half_pi + k * T::PI();
                    if phase > pb {
                        break;
                    }
                    let v = self.value(phase / frequency);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    k = k + T::one();
                }
                (lo, hi)
            }
        }
    }
}

/// One interval `[start, end)` of a piecewise initial condition. `None` ends are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub start: Option<T>,
    pub end: Option<T>,
    pub profile: Profile<T>,
}

/// Piecewise initial density on the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition<T> {
    pieces: Vec<Piece<T>>,
    // value of the cumulative integral (from 0) at each piece's start
    offsets: Vec<T>,
}

impl<T: Scalar> InitialCondition<T> {
    pub fn new(pieces: Vec<Piece<T>>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInitialCondition(m));
        if pieces.is_empty() {
            return bad("no pieces".into());
        }
        if pieces[0].start.is_some() {
            return bad("first piece must start at -infinity".into());
        }
        if pieces[pieces.len() - 1].end.is_some() {
            return bad("last piece must extend to +infinity".into());
        }
        for (i, w) in pieces.windows(2).enumerate() {
            match (w[0].end, w[1].start) {
                (Some(e), Some(s)) if e == s => {}
                _ => return bad(format!("pieces {i} and {} are not contiguous", i + 1)),
            }
        }
        for (i, p) in pieces.iter().enumerate() {
            if let (Some(a), Some(b)) = (p.start, p.end) {
                if !(a < b) {
                    return bad(format!("piece {i} is empty"));
                }
            }
            let (lo, hi) = p.profile.range_on(
                p.start.unwrap_or(T::neg_infinity()),
                p.end.unwrap_or(T::infinity()),
            );
            if !(lo >= T::zero() && hi <= T::one()) {
                return bad(format!(
                    "piece {i} takes values in [{lo}, {hi}], outside [0, 1]"
                ));
            }
        }
        let mut ic = Self {
            pieces,
            offsets: Vec::new(),
        };
        ic.offsets = ic.compute_offsets();
        Ok(ic)
    }

    pub fn constant(c: T) -> Result<Self> {
        Self::new(vec![Piece {
            start: None,
            end: None,
            profile: Profile::Constant(c),
        }])
    }

    /// `left` on `(-inf, at)`, `right` on `[at, inf)`.
    pub fn riemann(left: T, right: T, at: T) -> Result<Self> {
        Self::new(vec![
            Piece {
                start: None,
                end: Some(at),
                profile: Profile::Constant(left),
            },
            Piece {
                start: Some(at),
                end: None,
                profile: Profile::Constant(right),
            },
        ])
    }

    pub fn sine(offset: T, amplitude: T, frequency: T) -> Result<Self> {
        Self::new(vec![Piece {
            start: None,
            end: None,
            profile: Profile::Sine {
                offset,
                amplitude,
                frequency,
            },
        }])
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    fn piece_index(&self, x: T) -> usize {
        // first piece whose end is beyond x
        self.pieces
            .iter()
            .position(|p| p.end.is_none_or(|e| x < e))
            .unwrap_or(self.pieces.len() - 1)
    }

    pub fn value(&self, x: T) -> T {
        self.pieces[self.piece_index(x)].profile.value(x)
    }

    /// Interior breakpoints between pieces, ascending.
    pub fn breakpoints(&self) -> Vec<T> {
        self.pieces.iter().filter_map(|p| p.end).collect()
    }

    /// `(inf ρ⁰, sup ρ⁰)` over the real line.
    pub fn bounds(&self) -> (T, T) {
        self.bounds_on(T::neg_infinity(), T::infinity())
    }

    /// `(inf, sup)` of the initial density over `[a, b]`.
    pub fn bounds_on(&self, a: T, b: T) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for p in &self.pieces {
            let s = p.start.unwrap_or(T::neg_infinity()).max(a);
            let e = p.end.unwrap_or(T::infinity()).min(b);
            if s > e || (s == e && p.end == Some(e)) {
                continue;
            }
            let (l, h) = p.profile.range_on(s, e);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        (lo, hi)
    }

    fn anchor(&self) -> usize {
        self.piece_index(T::zero())
    }

    // offsets[i] = ∫_0^{start_i} ρ⁰ for i >= 1; offsets[0] is unused.
    fn compute_offsets(&self) -> Vec<T> {
        let n = self.pieces.len();
        let a = self.anchor();
        let prim = |i: usize, x: T| self.pieces[i].profile.primitive(x);
        let start = |i: usize| self.pieces[i].start.unwrap();
        let mut offsets = vec![T::zero(); n];
        if a + 1 < n {
            offsets[a + 1] = prim(a, start(a + 1)) - prim(a, T::zero());
        }
        for i in a + 2..n {
            offsets[i] = offsets[i - 1] + prim(i - 1, start(i)) - prim(i - 1, start(i - 1));
        }
        if a >= 1 {
            offsets[a] = prim(a, start(a)) - prim(a, T::zero());
            for i in (1..a).rev() {
                offsets[i] = offsets[i + 1] - (prim(i, start(i + 1)) - prim(i, start(i)));
            }
        }
        offsets
    }

    /// `∫_0^x ρ⁰(s) ds`.
    pub fn cumulative(&self, x: T) -> T {
        let i = self.piece_index(x);
        let a = self.anchor();
        let p = &self.pieces[i].profile;
        if i == a {
            p.primitive(x) - p.primitive(T::zero())
        } else if i > a {
            let s = self.pieces[i].start.unwrap();
            self.offsets[i] + p.primitive(x) - p.primitive(s)
        } else {
            let e = self.pieces[i].end.unwrap();
            self.offsets[i + 1] - (p.primitive(e) - p.primitive(x))
        }
    }
}
