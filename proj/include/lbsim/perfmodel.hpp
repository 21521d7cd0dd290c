#ifndef LBSIM_PERFMODEL_HPP
#define LBSIM_PERFMODEL_HPP

#include <lbsim/error.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace lbsim
{

//! Strong-scaling power law t = exp(log_intercept) * n^(-exponent).
struct ScalingModel
{
    double exponent = 1.0;
    double log_intercept = 0.0;
    //! Root-mean-square error of the fit in log(t).
    double residual = 0.0;

    //! Outside [0, 1.2] the fit is suspicious (super-linear or negative scaling).
    bool in_sanity_band() const { return exponent >= 0.0 && exponent <= 1.2; }

    double predict( double nodes ) const
    {
        return std::exp( log_intercept - exponent * std::log( nodes ) );
    }

    // Calibrated exponents for the two geometries of the reference code.
    static constexpr double exponent_2d3v = 0.91;
    static constexpr double exponent_3d3v = 0.88;
};

struct ScalingPoint
{
    double nodes = 0.0;
    double walltime = 0.0;
};

//! Unweighted least squares fit of log(t) = a - x log(n).
inline ScalingModel fit_scaling( std::span<const ScalingPoint> points )
{
    if ( points.size() < 2 )
        throw ConfigError( "fit_scaling: need at least 2 points, got " +
                           std::to_string( points.size() ) );
    for ( const auto& p : points )
        if ( !( p.nodes > 0.0 ) || !( p.walltime > 0.0 ) )
            throw ConfigError( "fit_scaling: node counts and walltimes must be positive" );

    const double n = double( points.size() );
    double mean_u = 0.0, mean_v = 0.0;
    for ( const auto& p : points )
    {
        mean_u += std::log( p.nodes );
        mean_v += std::log( p.walltime );
    }
    mean_u /= n;
    mean_v /= n;

    double suu = 0.0, suv = 0.0;
    for ( const auto& p : points )
    {
        const double du = std::log( p.nodes ) - mean_u;
        suu += du * du;
        suv += du * ( std::log( p.walltime ) - mean_v );
    }
    if ( suu == 0.0 )
        throw ConfigError( "fit_scaling: all points share one node count" );

    ScalingModel m;
    const double slope = suv / suu;
    m.exponent = -slope;
    m.log_intercept = mean_v - slope * mean_u;

    double sse = 0.0;
    for ( const auto& p : points )
    {
        const double r = std::log( p.walltime ) -
                         ( m.log_intercept - m.exponent * std::log( p.nodes ) );
        sse += r * r;
    }
    m.residual = std::sqrt( sse / n );
    return m;
}

//! Best speedup from perfectly balancing a run starting at efficiency e0.
inline double max_speedup( double e0, double exponent )
{
    if ( !( e0 > 0.0 && e0 <= 1.0 ) )
        throw ConfigError( "max_speedup: initial efficiency must lie in (0, 1]" );
    if ( !( exponent >= 0.0 ) )
        throw ConfigError( "max_speedup: exponent must be >= 0" );
    return std::pow( 1.0 / e0, exponent );
}

inline double achieved_fraction( double measured_speedup, double predicted_speedup )
{
    if ( !( measured_speedup > 0.0 && predicted_speedup > 0.0 ) )
        throw ConfigError( "achieved_fraction: speedups must be positive" );
    return measured_speedup / predicted_speedup;
}

} // namespace lbsim

#endif // LBSIM_PERFMODEL_HPP
