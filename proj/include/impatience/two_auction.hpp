#pragma once

// Two sequential second-price auctions for one ticket worth `ticket_value`,
// where only the first ticket won has value. The second auction is bid
// truthfully (ticket_value if the first was lost, nothing otherwise), so the
// expected profit of a first bid b is
//
//   E[(V - C1) 1{C1 < b}] + P(C1 >= b) * E[(V - C2) 1{C2 < V}]
//
// and the optimum shades the first bid below V by the continuation value.

#include <vector>

#include "impatience/simulator.hpp"

namespace impatience {

struct ProfitPoint {
  double bid = 0.0;
  double expected_profit = 0.0;
};

struct TwoAuctionResult {
  double best_first_bid = 0.0;
  double best_profit = 0.0;
  /// Expected profit of the second auction when the first is lost.
  double continuation_value = 0.0;
  std::vector<ProfitPoint> curve;
};

/// Closed-form expected total profit of first bid `bid`.
double two_auction_profit(double ticket_value, const PriceDistribution& first, const PriceDistribution& second,
                          double bid) noexcept;

/// Grid search over first bids 0, step, 2*step, ..., ticket_value (the value
/// itself is always on the grid). Among equal-profit bids the largest wins,
/// so a flat profit curve returns the truthful bid.
TwoAuctionResult two_auction_demo(double ticket_value, const PriceDistribution& first,
                                  const PriceDistribution& second, double grid_step);

inline TwoAuctionResult two_auction_demo(double ticket_value, const PriceDistribution& competition, double grid_step) {
  return two_auction_demo(ticket_value, competition, competition, grid_step);
}

}  // namespace impatience
