//! Bundled synthetic identity pool.
//!
//! Identities are composed from small seed lists: first names, surname
//! syllables and towns with a zip code prefix. A fraction of identities are
//! "relatives" of an earlier one: same surname and address with a first name
//! one edit away. Those give the linkage realistic near-duplicates.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::record::PlainRecord;

const FIRST_NAMES: &[&str] = &[
    "james",
    "mary",
    "john",
    "patricia",
    "robert",
    "jennifer",
    "michael",
    "linda",
    "william",
    "elizabeth",
    "david",
    "barbara",
    "richard",
    "susan",
    "joseph",
    "jessica",
    "thomas",
    "sarah",
    "charles",
    "karen",
    "christopher",
    "nancy",
    "daniel",
    "lisa",
    "matthew",
    "betty",
    "anthony",
    "margaret",
    "mark",
    "sandra",
    "donald",
    "ashley",
    "steven",
    "kimberly",
    "paul",
    "emily",
    "andrew",
    "donna",
    "joshua",
    "michelle",
    "kenneth",
    "dorothy",
    "kevin",
    "carol",
    "brian",
    "amanda",
    "george",
    "melissa",
    "edward",
    "deborah",
    "ronald",
    "stephanie",
    "timothy",
    "rebecca",
    "jason",
    "sharon",
    "jeffrey",
    "laura",
    "ryan",
    "cynthia",
    "jacob",
    "kathleen",
    "gary",
    "amy",
    "nicholas",
    "shirley",
    "eric",
    "angela",
    "jonathan",
    "helen",
    "stephen",
    "anna",
    "larry",
    "brenda",
    "justin",
    "pamela",
    "scott",
    "nicole",
    "brandon",
    "emma",
    "benjamin",
    "samantha",
    "samuel",
    "katherine",
    "gregory",
    "christine",
    "frank",
    "debra",
    "alexander",
    "rachel",
    "raymond",
    "catherine",
    "patrick",
    "carolyn",
    "jack",
    "janet",
    "dennis",
    "ruth",
    "jerry",
    "maria",
    "tyler",
    "heather",
    "aaron",
    "diane",
    "jose",
    "virginia",
    "adam",
    "julie",
    "henry",
    "joyce",
    "nathan",
    "victoria",
    "douglas",
    "olivia",
    "zachary",
    "kelly",
    "peter",
    "christina",
    "kyle",
    "lauren",
    "walter",
    "joan",
    "ethan",
    "evelyn",
    "jeremy",
    "judith",
    "harold",
    "megan",
    "keith",
    "cheryl",
    "christian",
    "andrea",
    "roger",
    "hannah",
    "noah",
    "martha",
    "gerald",
    "jacqueline",
    "carl",
    "frances",
    "terry",
    "gloria",
    "sean",
    "ann",
    "austin",
    "teresa",
    "arthur",
    "kathryn",
    "lawrence",
    "sara",
    "jesse",
    "janice",
    "dylan",
    "jean",
    "bryan",
    "alice",
    "joe",
    "madison",
    "jordan",
    "doris",
    "billy",
    "abigail",
    "bruce",
    "julia",
    "albert",
    "judy",
    "willie",
    "grace",
    "gabriel",
    "denise",
    "logan",
    "amber",
    "alan",
    "marilyn",
    "juan",
    "beverly",
    "wayne",
    "danielle",
    "roy",
    "theresa",
    "ralph",
    "sophia",
    "randy",
    "marie",
    "eugene",
    "diana",
    "vincent",
    "brittany",
    "russell",
    "natalie",
    "elijah",
    "isabella",
    "louis",
    "charlotte",
    "bobby",
    "rose",
    "philip",
    "alexis",
    "johnny",
    "kayla",
];

const SURNAME_HEADS: &[&str] = &[
    "ash", "bar", "bel", "bing", "brad", "bram", "cal", "car", "chad", "dal", "dar", "den", "dun", "el", "fair", "far",
    "fen", "gar", "gil", "glen", "grim", "hal", "har", "hart", "hol", "kel", "kin", "lang", "lin", "mar", "mel", "mor",
    "nor", "os", "pem", "quin", "rad", "ren", "ros", "sal", "sher", "stan", "thorn", "tur", "ul", "val", "war", "wes",
    "whit", "wil", "york", "zan", "ab", "eck", "fitz", "jor", "kess", "lor", "mac", "pel",
];

const SURNAME_TAILS: &[&str] = &[
    "ton", "ley", "ford", "wood", "son", "man", "er", "ing", "ridge", "well", "by", "field", "more", "stead", "ham",
    "wick", "dale", "ney", "ett", "ow", "mont", "berg", "sby", "combe", "land", "hurst", "ville", "ock", "den", "ard",
    "ish", "ian", "ez", "ini", "ova", "ski",
];

const TOWNS: &[(&str, u32)] = &[
    ("raleigh", 276),
    ("durham", 277),
    ("greensboro", 274),
    ("charlotte", 282),
    ("wilmington", 284),
    ("asheville", 288),
    ("fayetteville", 283),
    ("cary", 275),
    ("boone", 286),
    ("hickory", 286),
    ("concord", 280),
    ("gastonia", 280),
    ("jacksonville", 285),
    ("greenville", 278),
    ("winston salem", 271),
    ("high point", 272),
    ("chapel hill", 275),
    ("burlington", 272),
    ("rocky mount", 278),
    ("salisbury", 281),
    ("goldsboro", 275),
    ("monroe", 281),
    ("sanford", 273),
    ("new bern", 285),
    ("kinston", 285),
    ("shelby", 281),
    ("lumberton", 283),
    ("statesville", 286),
    ("apex", 275),
    ("mooresville", 281),
    ("wake forest", 275),
    ("hendersonville", 287),
    ("morganton", 286),
    ("lenoir", 286),
    ("elizabeth city", 279),
    ("kannapolis", 280),
    ("matthews", 281),
    ("garner", 275),
    ("clayton", 275),
    ("mebane", 273),
];

/// Distinct identities to sample entities from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourcePool {
    pub identities: Vec<PlainRecord>,
}

impl SourcePool {
    /// Builds `size` distinct identities; roughly `relative_rate` of them
    /// are near-duplicates of an earlier identity.
    pub fn synthetic<R: Rng>(size: usize, relative_rate: f64, rng: &mut R) -> Self {
        let mut seen: HashSet<(String, String, String, String)> = HashSet::with_capacity(size);
        let mut identities: Vec<PlainRecord> = Vec::with_capacity(size);
        while identities.len() < size {
            let candidate = match identities.choose(rng) {
                Some(base) if rng.gen_bool(relative_rate) => relative_of(base, rng),
                _ => fresh_identity(rng),
            };
            let key = (
                candidate.first_name.clone(),
                candidate.last_name.clone(),
                candidate.city.clone(),
                candidate.zipcode.clone(),
            );
            if seen.insert(key) {
                identities.push(candidate);
            }
        }
        Self { identities }
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }
}

fn fresh_identity<R: Rng>(rng: &mut R) -> PlainRecord {
    let first = FIRST_NAMES.choose(rng).unwrap();
    let last = format!(
        "{}{}",
        SURNAME_HEADS.choose(rng).unwrap(),
        SURNAME_TAILS.choose(rng).unwrap()
    );
    let (town, prefix) = TOWNS.choose(rng).unwrap();
    PlainRecord {
        record_id: String::new(),
        entity_id: None,
        first_name: first.to_string(),
        last_name: last,
        city: town.to_string(),
        zipcode: format!("{prefix}{:02}", rng.gen_range(0..100)),
    }
}

/// Same household, first name one substitution away.
fn relative_of<R: Rng>(base: &PlainRecord, rng: &mut R) -> PlainRecord {
    let mut chars: Vec<char> = base.first_name.chars().collect();
    // keep the initial so the relative usually shares the blocking key
    let at = if chars.len() > 1 {
        rng.gen_range(1..chars.len())
    } else {
        0
    };
    let old = chars[at];
    let mut c = old;
    while c == old {
        c = rng.gen_range(b'a'..=b'z') as char;
    }
    chars[at] = c;
    PlainRecord {
        first_name: chars.into_iter().collect(),
        ..base.clone()
    }
}
