//! Turn raw proximity contacts (`t i j` rows) into an event stream, keeping
//! first occurrences and relabelling badges densely.
//!
//! cargo run --release --example convert_contacts

use hawkesnet::ingest::{contacts_to_events, parse_contacts, write_events, ConvertOptions};

const CONTACTS: &str = "\
# t i j
1240 1467 1591
1240 1467 1513
1260 1591 1467
1300 1513 1591
1300 1513 1513
1420 1201 1467
1440 1201 1467
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = parse_contacts(CONTACTS)?;
    let conv = contacts_to_events(&rows, &ConvertOptions { rescale_to: Some(1.0) })?;
    println!(
        "{} rows -> {} events; {} repeated contacts dropped, {} self-loops skipped\n",
        rows.len(),
        conv.stream.events.len(),
        conv.repeats_dropped,
        conv.self_loops_skipped
    );
    print!("{}", write_events(&conv.stream));
    println!();
    print!("{}", conv.dictionary_tsv());
    Ok(())
}
