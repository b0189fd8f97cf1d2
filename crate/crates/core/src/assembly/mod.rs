use std::marker::PhantomData;
pub struct SurfaceComplex<T>(PhantomData<T>);
