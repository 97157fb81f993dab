use std::ops::Not;

/// One boolean channel of a 2D slice, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Self {
        assert_eq!(
            data.len(),
            height * width,
            "mask data does not match {height}x{width}"
        );
        BinaryMask {
            height,
            width,
            data,
        }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![false; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let data = (0..height * width)
            .map(|i| f(i / width, i % width))
            .collect();
        Self::new(height, width, data)
    }

    /// The channel of `class` in a label slice.
    pub fn from_labels(labels: &[u8], height: usize, width: usize, class: u8) -> Self {
        Self::new(height, width, labels.iter().map(|&l| l == class).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a || b)
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        BinaryMask::new(self.height, self.width, data)
    }
}

impl Not for &BinaryMask {
    type Output = BinaryMask;

    fn not(self) -> BinaryMask {
        BinaryMask::new(
            self.height,
            self.width,
            self.data.iter().map(|v| !v).collect(),
        )
    }
}
