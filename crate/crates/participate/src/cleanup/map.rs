//! Grid layouts for the cleanup game.
//!
//! Maps are stored as plain text, one character per cell kind, and parsed at
//! construction. The same format is what `dump` emits for inspection, so a
//! layout file round-trips unchanged.

use crate::error::{Error, Result};

/// What occupies a cell (agents are tracked separately).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Empty,
    /// Clean river cell; part of the river region.
    River,
    /// Polluted river cell; part of the river region.
    Waste,
    /// Orchard floor without an apple.
    Orchard,
    /// Orchard cell with a collectible apple.
    Apple,
}

impl Cell {
    pub fn to_char(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Empty => '.',
            Cell::River => '~',
            Cell::Waste => 'W',
            Cell::Orchard => 'O',
            Cell::Apple => 'A',
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '#' => Some(Cell::Wall),
            '.' => Some(Cell::Empty),
            '~' => Some(Cell::River),
            'W' => Some(Cell::Waste),
            'O' => Some(Cell::Orchard),
            'A' => Some(Cell::Apple),
            _ => None,
        }
    }

    /// River-region cells are where waste can sit and cleaning beams fire.
    pub fn is_river_region(self) -> bool {
        matches!(self, Cell::River | Cell::Waste)
    }

    /// Orchard-region cells are where apples can spawn.
    pub fn is_orchard_region(self) -> bool {
        matches!(self, Cell::Orchard | Cell::Apple)
    }

    /// Channel index in observations; kinds are mutually exclusive per cell.
    pub fn channel(self) -> usize {
        match self {
            Cell::Wall => 0,
            Cell::Empty => 1,
            Cell::River => 2,
            Cell::Waste => 3,
            Cell::Orchard => 4,
            Cell::Apple => 5,
        }
    }
}

/// Grid position as (row, col), row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

/// Rectangular cell grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl Grid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, pos: Pos) -> Cell {
        self.cells[pos.row * self.width + pos.col]
    }

    pub fn set(&mut self, pos: Pos, cell: Cell) {
        self.cells[pos.row * self.width + pos.col] = cell;
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.row < self.height && pos.col < self.width
    }

    /// All positions in scan order (top-left to bottom-right).
    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Pos { row, col }))
    }

    pub fn count(&self, pred: impl Fn(Cell) -> bool) -> usize {
        self.cells.iter().filter(|&&c| pred(c)).count()
    }

    /// Parse a plain-text layout: one row per line, one character per cell.
    pub fn parse(text: &str) -> Result<Grid> {
        let mut cells = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (i, line) in text.lines().enumerate() {
            let row: Vec<Cell> = line
                .chars()
                .map(|c| {
                    Cell::from_char(c)
                        .ok_or_else(|| Error::parse(i + 1, format!("unknown cell '{c}'")))
                })
                .collect::<Result<_>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::parse(
                        i + 1,
                        format!("row is {} cells wide, expected {w}", row.len()),
                    ));
                }
                _ => {}
            }
            cells.extend(row);
            height += 1;
        }
        let width = width.unwrap_or(0);
        if width == 0 || height == 0 {
            return Err(Error::parse(1, "empty map"));
        }
        Ok(Grid {
            width,
            height,
            cells,
        })
    }

    /// Inverse of [`Grid::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(self.get(Pos { row, col }).to_char());
            }
            out.push('\n');
        }
        out
    }
}

/// Which of the two built-in maps to play on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapId {
    /// 7x7 walled map, two agents.
    Small7x7,
    /// 10x10 walled map, three agents.
    Big10x10,
}

/// Small map, v1: river in the two left interior columns with two waste
/// cells at the top, orchard along the right interior column. Agent 1 starts
/// in the river bottom, agent 2 next to the orchard top.
pub const SMALL_7X7_V1: &str = "\
#######
#W~..O#
#W~..O#
#~~..O#
#~~..O#
#~~..O#
#######
";

/// Big map, v1: river in the two left interior columns with waste on
/// alternating rows, orchard along the two right interior columns on
/// alternating widths. Agent 1 starts by the river, agent 2 mid-map,
/// agent 3 next to the orchard.
pub const BIG_10X10_V1: &str = "\
##########
#WW.....O#
#~~....OO#
#WW.....O#
#~~....OO#
#WW.....O#
#~~....OO#
#WW.....O#
#~~....OO#
##########
";

impl MapId {
    pub fn layout_text(self) -> &'static str {
        match self {
            MapId::Small7x7 => SMALL_7X7_V1,
            MapId::Big10x10 => BIG_10X10_V1,
        }
    }

    pub fn grid(self) -> Grid {
        Grid::parse(self.layout_text()).expect("built-in maps parse")
    }

    /// Default agent start positions.
    pub fn spawns(self) -> Vec<Pos> {
        match self {
            MapId::Small7x7 => vec![Pos::new(5, 2), Pos::new(1, 4)],
            MapId::Big10x10 => vec![Pos::new(8, 3), Pos::new(5, 4), Pos::new(1, 6)],
        }
    }

    pub fn agent_count(self) -> usize {
        self.spawns().len()
    }
}
