#ifndef LBSIM_IO_HPP
#define LBSIM_IO_HPP

#include <lbsim/cost.hpp>
#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>
#include <lbsim/perfmodel.hpp>
#include <lbsim/workload.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lbsim::io
{

// Column orders are part of the file format.
inline constexpr std::string_view metrics_header =
    "step,eff_before,eff_after,adopted,compute_max,comm_max,gather,redistribute,walltime,"
    "max_rank_particles,oom";
inline constexpr std::string_view cost_trace_header = "step,box_id,cost";
inline constexpr std::string_view mapping_header = "step,box_id,rank";
inline constexpr std::string_view scaling_header = "nodes,walltime";

//! Shortest text that round-trips to the same double.
inline std::string format_double( double v )
{
    char buf[64];
    std::snprintf( buf, sizeof( buf ), "%.17g", v );
    return buf;
}

//---------------------------------------------------------------------------//
// Writers
//---------------------------------------------------------------------------//
inline void write_metrics_csv( std::ostream& os, const std::vector<StepMetrics>& steps )
{
    os << metrics_header << '\n';
    for ( const auto& m : steps )
        os << m.step << ',' << format_double( m.eff_before ) << ','
           << format_double( m.eff_after ) << ',' << ( m.adopted ? 1 : 0 ) << ','
           << format_double( m.compute_max ) << ',' << format_double( m.comm_max ) << ','
           << format_double( m.gather ) << ',' << format_double( m.redistribute ) << ','
           << format_double( m.walltime ) << ',' << m.max_rank_particles << ','
           << ( m.oom ? 1 : 0 ) << '\n';
}

inline void write_cost_trace_csv( std::ostream& os, const std::vector<CostVector>& trace )
{
    os << cost_trace_header << '\n';
    for ( const auto& cv : trace )
        for ( std::size_t b = 0; b < cv.size(); ++b )
            os << cv.step << ',' << b << ',' << format_double( cv[b] ) << '\n';
}

inline void write_mapping_csv( std::ostream& os, const std::vector<MappingSnapshot>& snaps )
{
    os << mapping_header << '\n';
    for ( const auto& s : snaps )
        for ( std::size_t b = 0; b < s.mapping.size(); ++b )
            os << s.step << ',' << b << ',' << s.mapping[BoxId( b )] << '\n';
}

inline void write_scaling_csv( std::ostream& os, const std::vector<ScalingPoint>& points )
{
    os << scaling_header << '\n';
    for ( const auto& p : points )
        os << format_double( p.nodes ) << ',' << format_double( p.walltime ) << '\n';
}

//---------------------------------------------------------------------------//
// Readers
//---------------------------------------------------------------------------//
namespace detail
{
struct CsvRows
{
    std::string path;
    std::vector<std::vector<std::string>> rows;
    //! 1-based file line of each row.
    std::vector<std::size_t> lines;
};

inline CsvRows read_csv( const std::string& path, std::string_view header )
{
    std::ifstream in( path );
    if ( !in )
        throw IoError( "cannot read '" + path + "'" );
    CsvRows out;
    out.path = path;
    std::string line;
    if ( !std::getline( in, line ) )
        throw ContractError( path + ": empty file" );
    if ( !line.empty() && line.back() == '\r' )
        line.pop_back();
    if ( line != header )
        throw ContractError( path + ": expected header '" + std::string( header ) +
                             "', found '" + line + "'" );
    const auto ncols = std::size_t( std::count( header.begin(), header.end(), ',' ) ) + 1;
    std::size_t lineno = 1;
    while ( std::getline( in, line ) )
    {
        ++lineno;
        if ( !line.empty() && line.back() == '\r' )
            line.pop_back();
        if ( line.empty() )
            continue;
        std::vector<std::string> cols;
        std::stringstream ss( line );
        std::string cell;
        while ( std::getline( ss, cell, ',' ) )
            cols.push_back( cell );
        if ( cols.size() != ncols )
            throw ContractError( path + ":" + std::to_string( lineno ) + ": expected " +
                                 std::to_string( ncols ) + " columns, found " +
                                 std::to_string( cols.size() ) );
        out.rows.push_back( std::move( cols ) );
        out.lines.push_back( lineno );
    }
    return out;
}

inline std::int64_t parse_int( const CsvRows& csv, std::size_t row, std::size_t col )
{
    const auto& s = csv.rows[row][col];
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars( s.data(), s.data() + s.size(), v );
    if ( ec != std::errc() || ptr != s.data() + s.size() )
        throw ContractError( csv.path + ":" + std::to_string( csv.lines[row] ) +
                             ": not an integer: '" + s + "'" );
    return v;
}

inline double parse_real( const CsvRows& csv, std::size_t row, std::size_t col )
{
    const auto& s = csv.rows[row][col];
    std::size_t used = 0;
    double v = 0.0;
    try
    {
        v = std::stod( s, &used );
    }
    catch ( const std::exception& )
    {
        used = 0;
    }
    if ( used == 0 || used != s.size() )
        throw ContractError( csv.path + ":" + std::to_string( csv.lines[row] ) +
                             ": not a number: '" + s + "'" );
    return v;
}
} // namespace detail

/*!
  Read a cost trace. Steps must be consecutive and every step must list each
  box id 0..n-1 exactly once, with n the same for all steps.
*/
inline std::vector<CostVector> read_cost_trace( const std::string& path )
{
    const auto csv = detail::read_csv( path, cost_trace_header );
    std::map<std::int64_t, std::map<std::int64_t, double>> by_step;
    for ( std::size_t i = 0; i < csv.rows.size(); ++i )
    {
        const auto step = detail::parse_int( csv, i, 0 );
        const auto box = detail::parse_int( csv, i, 1 );
        const auto cost = detail::parse_real( csv, i, 2 );
        if ( box < 0 )
            throw ContractError( path + ": negative box id at line " +
                                 std::to_string( csv.lines[i] ) );
        if ( !by_step[step].emplace( box, cost ).second )
            throw ContractError( path + ": duplicate box " + std::to_string( box ) +
                                 " at step " + std::to_string( step ) );
    }
    if ( by_step.empty() )
        throw ContractError( path + ": trace has no rows" );

    std::vector<CostVector> trace;
    std::int64_t expected_step = by_step.begin()->first;
    std::size_t n_boxes = 0;
    for ( const auto& [step, boxes] : by_step )
    {
        if ( step != expected_step )
            throw ContractError( path + ": gap in steps, missing step " +
                                 std::to_string( expected_step ) );
        std::int64_t expected_box = 0;
        for ( const auto& [box, cost] : boxes )
        {
            if ( box != expected_box )
                break;
            ++expected_box;
        }
        if ( std::size_t( expected_box ) != boxes.size() )
            throw ContractError( path + ": gap in box ids at step " + std::to_string( step ) +
                                 ", missing box " + std::to_string( expected_box ) );
        if ( trace.empty() )
            n_boxes = boxes.size();
        else if ( boxes.size() != n_boxes )
            throw ContractError( path + ": step " + std::to_string( step ) + " has " +
                                 std::to_string( boxes.size() ) + " boxes, expected " +
                                 std::to_string( n_boxes ) + ( boxes.size() < n_boxes
                                     ? " (missing box " + std::to_string( boxes.size() ) + ")"
                                     : "" ) );
        CostVector cv;
        cv.step = step;
        cv.cost.reserve( boxes.size() );
        for ( const auto& [box, cost] : boxes )
            cv.cost.push_back( cost );
        trace.push_back( std::move( cv ) );
        ++expected_step;
    }
    return trace;
}

/*!
  Read every snapshot of a mapping file. n_ranks is taken from the argument
  when positive, otherwise inferred as the largest rank id plus one.
*/
inline std::vector<MappingSnapshot> read_mappings( const std::string& path, int n_ranks = 0 )
{
    const auto csv = detail::read_csv( path, mapping_header );
    std::map<std::int64_t, std::map<std::int64_t, RankId>> by_step;
    RankId max_rank = 0;
    for ( std::size_t i = 0; i < csv.rows.size(); ++i )
    {
        const auto step = detail::parse_int( csv, i, 0 );
        const auto box = detail::parse_int( csv, i, 1 );
        const auto rank = detail::parse_int( csv, i, 2 );
        if ( box < 0 || rank < 0 )
            throw ContractError( path + ": negative id at line " +
                                 std::to_string( csv.lines[i] ) );
        if ( !by_step[step].emplace( box, RankId( rank ) ).second )
            throw ContractError( path + ": duplicate box " + std::to_string( box ) +
                                 " at step " + std::to_string( step ) );
        max_rank = std::max( max_rank, RankId( rank ) );
    }
    if ( by_step.empty() )
        throw ContractError( path + ": mapping file has no rows" );
    const int ranks = n_ranks > 0 ? n_ranks : int( max_rank ) + 1;

    std::vector<MappingSnapshot> out;
    for ( const auto& [step, boxes] : by_step )
    {
        std::vector<RankId> owner;
        std::int64_t expected = 0;
        for ( const auto& [box, rank] : boxes )
        {
            if ( box != expected )
                throw ContractError( path + ": gap in box ids at step " +
                                     std::to_string( step ) + ", missing box " +
                                     std::to_string( expected ) );
            owner.push_back( rank );
            ++expected;
        }
        out.push_back( { step, DistributionMapping( std::move( owner ), ranks ) } );
    }
    return out;
}

inline std::vector<ScalingPoint> read_scaling_points( const std::string& path )
{
    const auto csv = detail::read_csv( path, scaling_header );
    std::vector<ScalingPoint> pts;
    for ( std::size_t i = 0; i < csv.rows.size(); ++i )
        pts.push_back( { detail::parse_real( csv, i, 0 ), detail::parse_real( csv, i, 1 ) } );
    return pts;
}

inline std::vector<StepMetrics> read_metrics( const std::string& path )
{
    const auto csv = detail::read_csv( path, metrics_header );
    std::vector<StepMetrics> out;
    out.reserve( csv.rows.size() );
    for ( std::size_t i = 0; i < csv.rows.size(); ++i )
    {
        StepMetrics m;
        m.step = detail::parse_int( csv, i, 0 );
        m.eff_before = detail::parse_real( csv, i, 1 );
        m.eff_after = detail::parse_real( csv, i, 2 );
        m.adopted = detail::parse_int( csv, i, 3 ) != 0;
        m.compute_max = detail::parse_real( csv, i, 4 );
        m.comm_max = detail::parse_real( csv, i, 5 );
        m.gather = detail::parse_real( csv, i, 6 );
        m.redistribute = detail::parse_real( csv, i, 7 );
        m.walltime = detail::parse_real( csv, i, 8 );
        m.max_rank_particles = detail::parse_int( csv, i, 9 );
        m.oom = detail::parse_int( csv, i, 10 ) != 0;
        m.attempted = m.gather > 0.0 || m.adopted;
        out.push_back( m );
    }
    return out;
}

//! Write text to a file, replacing it.
inline void write_file( const std::string& path, const std::string& text )
{
    std::ofstream out( path, std::ios::binary | std::ios::trunc );
    if ( !out )
        throw IoError( "cannot write '" + path + "'" );
    out << text;
    if ( !out )
        throw IoError( "write to '" + path + "' failed" );
}

} // namespace lbsim::io

#endif // LBSIM_IO_HPP
