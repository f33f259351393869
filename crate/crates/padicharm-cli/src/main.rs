fn main() { println!("padicharm"); }
