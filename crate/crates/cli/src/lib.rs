pub mod placeholder { }
