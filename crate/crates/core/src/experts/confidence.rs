use super::ExpertError;

/// Geometric-mean token probability: `exp(mean(logprobs))`.
pub fn extract_confidence(token_logprobs: &[f64]) -> Result<f64, ExpertError> {
    if token_logprobs.is_empty() {
        return Err(ExpertError::EmptyLogprobs);
    }
    if let Some(&bad) = token_logprobs.iter().find(|lp| lp.is_nan() || **lp > 0.0) {
        return Err(ExpertError::PositiveLogprob(bad));
    }
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok(mean.exp())
}
