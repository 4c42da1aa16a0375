#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "housekeep/embodiment.hpp"
#include "housekeep/errors.hpp"
#include "support/test_util.hpp"

using namespace housekeep;
using test_util::scene_from_rows;

namespace {

// ---- independent reference dynamics (kept deliberately separate from the
// ---- library implementation) ----

struct RefPose {
  int r, c, h;  // h: 0=N 1=E 2=S 3=W
};

RefPose ref_step(const std::vector<std::string>& rows, RefPose p, Action a) {
  static const int dr[4] = {-1, 0, 1, 0};
  static const int dc[4] = {0, 1, 0, -1};
  switch (a) {
    case Action::Forward: {
      const int nr = p.r + dr[p.h], nc = p.c + dc[p.h];
      const bool ok = nr >= 0 && nr < static_cast<int>(rows.size()) && nc >= 0 &&
                      nc < static_cast<int>(rows[0].size()) && rows[nr][nc] == '.';
      if (ok) {
        p.r = nr;
        p.c = nc;
      }
      break;
    }
    case Action::TurnLeft: p.h = (p.h + 3) % 4; break;
    case Action::TurnRight: p.h = (p.h + 1) % 4; break;
    case Action::Interact: break;
  }
  return p;
}

// Independent Bresenham (textbook error-accumulator form).
bool ref_los(const std::vector<std::string>& rows, Cell a, Cell b) {
  int x0 = a.c, y0 = a.r;
  const int x1 = b.c, y1 = b.r;
  const int dx = std::abs(x1 - x0), dy = std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx - dy;
  while (!(x0 == x1 && y0 == y1)) {
    if (!(y0 == a.r && x0 == a.c)) {
      if (rows[y0][x0] == '#') return false;
    }
    const int e2 = 2 * err;
    if (e2 >= -dy) {
      err -= dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return true;
}

std::set<Cell> ref_visible(const std::vector<std::string>& rows, Pose pose, int depth) {
  static const int dr[4] = {-1, 0, 1, 0};
  static const int dc[4] = {0, 1, 0, -1};
  const int h = static_cast<int>(pose.heading);
  const int rh = (h + 1) % 4;  // right-hand lateral axis
  std::set<Cell> out;
  const int R = static_cast<int>(rows.size()), C = static_cast<int>(rows[0].size());
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const int vr = r - pose.cell.r, vc = c - pose.cell.c;
      const int f = vr * dr[h] + vc * dc[h];
      const int l = vr * dr[rh] + vc * dc[rh];
      if (f < 0 || f > depth || std::abs(l) > f) continue;
      if (ref_los(rows, pose.cell, {r, c})) out.insert({r, c});
    }
  }
  return out;
}

GridScene two_rec_scene(std::vector<std::string>& rows_out) {
  rows_out = {
      "........",
      "..#.....",
      "..#.....",
      "........",
  };
  return scene_from_rows(rows_out, {{"recA", "counter", "", {0, 4}, 2},
                                    {"recB", "shelf", "", {3, 0}, 1}});
}

}  // namespace

TEST_CASE("forward into a wall flags a collision and keeps the pose") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {});
  AgentState st;
  st.pose = {{1, 1}, Heading::E};
  const StepResult r = step(scene, world, st, Action::Forward, 100);
  CHECK(r.collision);
  CHECK(r.state.pose.cell == Cell{1, 1});
  CHECK(r.state.last_collision);
  CHECK(r.state.step_count == 1);

  // Grid boundary also collides.
  st.pose = {{0, 0}, Heading::N};
  const StepResult r2 = step(scene, world, st, Action::Forward, 100);
  CHECK(r2.collision);
  CHECK(r2.state.pose.cell == Cell{0, 0});
}

TEST_CASE("four left turns are the identity") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {});
  AgentState st;
  st.pose = {{0, 0}, Heading::N};
  for (int i = 0; i < 4; ++i) {
    st = step(scene, world, st, Action::TurnLeft, 100).state;
  }
  CHECK(st.pose.heading == Heading::N);
  CHECK(st.pose.cell == Cell{0, 0});
  CHECK(st.step_count == 4);
}

TEST_CASE("step exhausts the budget") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {});
  AgentState st;
  st.pose = {{0, 0}, Heading::E};
  st = step(scene, world, st, Action::TurnLeft, 2).state;
  st = step(scene, world, st, Action::TurnLeft, 2).state;
  CHECK_THROWS_AS(step(scene, world, st, Action::TurnLeft, 2), BudgetExhausted);
}

TEST_CASE("random action sequences match the reference stepper") {
  Rng rng(17);
  for (int trial = 0; trial < 15; ++trial) {
    const auto rows = test_util::random_grid_rows(rng, 9, 9, 0.25);
    const auto cells = test_util::free_cells(rows);
    const GridScene scene = scene_from_rows(rows, {{"r0", "counter", "", cells[0], 2}});
    WorldState world(scene, {});
    AgentState st;
    st.pose = {cells[bounded(rng, cells.size())], static_cast<Heading>(bounded(rng, 4))};
    RefPose ref{st.pose.cell.r, st.pose.cell.c, static_cast<int>(st.pose.heading)};
    for (int i = 0; i < 60; ++i) {
      static const Action kActions[3] = {Action::Forward, Action::TurnLeft, Action::TurnRight};
      const Action a = kActions[bounded(rng, 3)];
      st = step(scene, world, st, a, 1000).state;
      ref = ref_step(rows, ref, a);
      REQUIRE(st.pose.cell.r == ref.r);
      REQUIRE(st.pose.cell.c == ref.c);
      REQUIRE(static_cast<int>(st.pose.heading) == ref.h);
    }
  }
}

TEST_CASE("observe sees a receptacle ahead and not through walls") {
  std::vector<std::string> rows = {
      ".....",
      ".###.",
      ".....",
  };
  const GridScene scene = scene_from_rows(rows, {{"recA", "counter", "", {0, 3}, 2},
                                                 {"recB", "shelf", "", {2, 2}, 2}});
  WorldState world(scene, {});

  AgentState facing;
  facing.pose = {{0, 2}, Heading::E};
  const Observation obs = observe(scene, world, facing);
  bool saw_a = false, saw_b = false;
  for (const auto& inst : obs.visible_instances) {
    if (inst.id == "recA") saw_a = true;
    if (inst.id == "recB") saw_b = true;
  }
  CHECK(saw_a);
  CHECK_FALSE(saw_b);  // behind the wall strip
  CHECK(obs.receptacle_rooms.at("recA") == "kitchen");
}

TEST_CASE("visibility equals the brute-force cone + line-of-sight oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rows = test_util::random_grid_rows(rng, 10, 10, 0.3);
    const auto cells = test_util::free_cells(rows);
    const GridScene scene = scene_from_rows(rows, {{"r0", "counter", "", cells[0], 2}});
    WorldState world(scene, {});
    AgentState st;
    st.pose = {cells[bounded(rng, cells.size())], static_cast<Heading>(bounded(rng, 4))};
    const Observation obs = observe(scene, world, st);
    const std::set<Cell> got(obs.visible_cells.begin(), obs.visible_cells.end());
    const std::set<Cell> want = ref_visible(rows, st.pose, kDefaultFovDepth);
    CHECK(got == want);
  }
}

TEST_CASE("interact picks an object a few cells ahead") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {{"cup_0", "cup", "recA"}});
  AgentState st;
  st.pose = {{0, 1}, Heading::E};  // recA at (0,4): 3 cells ahead
  const PickPlaceOutcome out = interact(scene, world, st);
  CHECK(out.kind == PickPlaceOutcome::Kind::Picked);
  CHECK(*out.object == "cup_0");
  CHECK(*out.receptacle == "recA");
  CHECK(*st.held == "cup_0");
  CHECK_FALSE(world.on_receptacle("cup_0").has_value());
}

TEST_CASE("interact range is six cells at 0.25 m/cell") {
  std::vector<std::string> rows(1, std::string(10, '.'));
  const GridScene scene = scene_from_rows(rows, {{"rec", "counter", "", {0, 7}, 2}});
  CHECK(interact_range(scene) == 6);

  WorldState world(scene, {{"cup_0", "cup", "rec"}});
  AgentState far;
  far.pose = {{0, 0}, Heading::E};  // 7 cells away: out of range
  CHECK(interact(scene, world, far).kind == PickPlaceOutcome::Kind::NoTarget);

  AgentState close;
  close.pose = {{0, 1}, Heading::E};  // exactly 6 cells
  CHECK(interact(scene, world, close).kind == PickPlaceOutcome::Kind::Picked);
}

TEST_CASE("interact stops at the first instance-bearing cell") {
  std::vector<std::string> rows(1, std::string(8, '.'));
  const GridScene scene = scene_from_rows(rows, {{"near", "counter", "", {0, 2}, 2},
                                                 {"far", "shelf", "", {0, 4}, 2}});
  WorldState world(scene, {{"cup_0", "cup", "far"}});
  AgentState st;
  st.pose = {{0, 0}, Heading::E};
  // The empty near receptacle blocks the ray: nothing to pick there.
  const PickPlaceOutcome out = interact(scene, world, st);
  CHECK(out.kind == PickPlaceOutcome::Kind::NoTarget);
}

TEST_CASE("placing on a full receptacle fails, leaving the object held") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);  // recB capacity 1
  WorldState world(scene, {{"cup_0", "cup", "recA"}, {"plate_0", "plate", "recB"}});
  AgentState st;
  st.pose = {{0, 1}, Heading::E};
  CHECK(interact(scene, world, st).kind == PickPlaceOutcome::Kind::Picked);

  st.pose = {{3, 2}, Heading::W};  // facing recB at (3,0)
  const PickPlaceOutcome out = interact(scene, world, st);
  CHECK(out.kind == PickPlaceOutcome::Kind::PlaceFailed);
  CHECK(*out.receptacle == "recB");
  CHECK(st.held.has_value());

  // recA still has room.
  st.pose = {{0, 1}, Heading::E};
  const PickPlaceOutcome ok = interact(scene, world, st);
  CHECK(ok.kind == PickPlaceOutcome::Kind::Placed);
  CHECK_FALSE(st.held.has_value());
  CHECK(*world.on_receptacle("cup_0") == "recA");
}

TEST_CASE("objects are conserved and never both held and placed") {
  Rng rng(31);
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {{"cup_0", "cup", "recA"}, {"cup_1", "cup", "recA"}});
  AgentState st;
  st.pose = {{0, 0}, Heading::E};
  for (int i = 0; i < 300; ++i) {
    static const Action kActions[4] = {Action::Forward, Action::TurnLeft, Action::TurnRight,
                                       Action::Interact};
    st = step(scene, world, st, kActions[bounded(rng, 4)], 1000).state;
    int placed = 0;
    for (const auto& [id, obj] : world.objects()) {
      if (!obj.on.empty()) ++placed;
    }
    const int held = st.held.has_value() ? 1 : 0;
    REQUIRE(placed + held == 2);
    if (st.held) REQUIRE(world.on_receptacle(*st.held) == std::nullopt);
  }
}

TEST_CASE("navigate_to_instance: already in range and facing gives an empty plan") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  const NavGrid nav = nav_from_scene(scene);
  const auto plan = navigate_to_instance(nav, {{0, 3}, Heading::E}, {0, 4});
  CHECK(plan.empty());
}

TEST_CASE("navigate_to_instance: target behind the agent needs exactly two turns") {
  std::vector<std::string> rows(1, std::string(8, '.'));
  const GridScene scene = scene_from_rows(rows, {{"rec", "counter", "", {0, 0}, 2}});
  const NavGrid nav = nav_from_scene(scene);
  // Facing east at (0,2); the receptacle is two cells behind (west).
  const auto plan = navigate_to_instance(nav, {{0, 2}, Heading::E}, {0, 0});
  int turns = 0;
  for (Action a : plan) {
    if (a == Action::TurnLeft || a == Action::TurnRight) ++turns;
  }
  CHECK(turns == 2);
  CHECK(plan.size() == 2);  // within range already: just turn around
}

TEST_CASE("navigate_to_cell: walled-off target raises NoPath") {
  const std::vector<std::string> rows = {
      "..#..",
      "..#..",
      "..#..",
  };
  // Two components: validation would reject, so build the NavGrid by hand.
  NavGrid nav;
  nav.rows = 3;
  nav.cols = 5;
  nav.range = 6;
  nav.traversable.assign(15, 0);
  nav.ray_blocking.assign(15, 0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 5; ++c) {
      if (rows[r][c] == '.') nav.traversable[r * 5 + c] = 1;
    }
  }
  CHECK_THROWS_AS(navigate_to_cell(nav, {{0, 0}, Heading::N}, {0, 4}), NoPath);
  CHECK_THROWS_AS(navigate_to_cell(nav, {{0, 0}, Heading::N}, {1, 2}), NoPath);
}

TEST_CASE("navigation plans are optimal per a Dijkstra oracle and reach the goal") {
  Rng rng(47);
  for (int trial = 0; trial < 15; ++trial) {
    const auto rows = test_util::random_grid_rows(rng, 9, 9, 0.25);
    const auto cells = test_util::free_cells(rows);
    if (cells.size() < 8) continue;
    const Cell rec_cell = cells[bounded(rng, cells.size())];
    const GridScene scene = scene_from_rows(rows, {{"rec", "counter", "", rec_cell, 2}});
    const NavGrid nav = nav_from_scene(scene);

    const Pose start{cells[bounded(rng, cells.size())], static_cast<Heading>(bounded(rng, 4))};
    std::vector<Action> plan;
    try {
      plan = navigate_to_instance(nav, start, rec_cell);
    } catch (const NoPath&) {
      continue;  // surrounded receptacle; nothing to compare
    }

    // Independent Dijkstra over (cell, heading) states to any interact pose.
    static const int dr[4] = {-1, 0, 1, 0};
    static const int dc[4] = {0, 1, 0, -1};
    auto pose_ok = [&](int r, int c, int h) {
      for (int k = 1; k <= 6; ++k) {
        const int tr = r + dr[h] * k, tc = c + dc[h] * k;
        if (tr < 0 || tr >= 9 || tc < 0 || tc >= 9) return false;
        if (tr == rec_cell.r && tc == rec_cell.c) return true;
        if (rows[tr][tc] == '#') return false;
      }
      return false;
    };
    std::map<std::tuple<int, int, int>, int> dist;
    using QE = std::pair<int, std::tuple<int, int, int>>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    const auto s0 = std::make_tuple(start.cell.r, start.cell.c, static_cast<int>(start.heading));
    dist[s0] = 0;
    pq.push({0, s0});
    int best = -1;
    while (!pq.empty()) {
      auto [d, s] = pq.top();
      pq.pop();
      if (d > dist[s]) continue;
      auto [r, c, h] = s;
      if (pose_ok(r, c, h)) {
        best = d;
        break;
      }
      auto push = [&](int nr, int nc, int nh) {
        const auto ns = std::make_tuple(nr, nc, nh);
        auto it = dist.find(ns);
        if (it == dist.end() || it->second > d + 1) {
          dist[ns] = d + 1;
          pq.push({d + 1, ns});
        }
      };
      const int fr = r + dr[h], fc = c + dc[h];
      if (fr >= 0 && fr < 9 && fc >= 0 && fc < 9 && rows[fr][fc] == '.') push(fr, fc, h);
      push(r, c, (h + 3) % 4);
      push(r, c, (h + 1) % 4);
    }
    REQUIRE(best >= 0);
    CHECK(static_cast<int>(plan.size()) == best);

    // Executing the plan ends within interact range, facing the target.
    WorldState world(scene, {});
    AgentState st;
    st.pose = start;
    for (Action a : plan) {
      const StepResult r = step(scene, world, st, a, 10000);
      CHECK_FALSE(r.collision);
      st = r.state;
    }
    CHECK(pose_ok(st.pose.cell.r, st.pose.cell.c, static_cast<int>(st.pose.heading)));
  }
}

TEST_CASE("pick and place skills work end to end") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);
  WorldState world(scene, {{"cup_0", "cup", "recA"}});
  AgentState st;
  st.pose = {{3, 7}, Heading::W};
  const NavGrid nav = nav_from_scene(scene);

  const StepFn exec = [&](Action a, const std::optional<std::string>& hint) {
    const StepResult r = step(scene, world, st, a, 1000, kDefaultFovDepth, hint);
    st = r.state;
    return r;
  };

  const SkillResult pick = pick_object(nav, st.pose, "cup_0", {0, 4}, exec);
  CHECK(pick.status == SkillResult::Status::Success);
  CHECK(*pick.receptacle == "recA");
  CHECK(*st.held == "cup_0");
  // Lower bound: at least the geodesic cell distance minus the ray reach.
  const int geo = *geodesic_distance(scene, {3, 7}, {0, 4});
  CHECK(pick.actions_spent >= geo - interact_range(scene));

  const SkillResult place = place_object(nav, st.pose, "recB", {3, 0}, exec);
  CHECK(place.status == SkillResult::Status::Success);
  CHECK_FALSE(st.held.has_value());
  CHECK(*world.on_receptacle("cup_0") == "recB");
}

TEST_CASE("place on a full receptacle reports PlaceFailed through the skill") {
  std::vector<std::string> rows;
  const GridScene scene = two_rec_scene(rows);  // recB capacity 1
  WorldState world(scene, {{"cup_0", "cup", "recA"}, {"plate_0", "plate", "recB"}});
  AgentState st;
  st.pose = {{0, 1}, Heading::E};
  const NavGrid nav = nav_from_scene(scene);
  const StepFn exec = [&](Action a, const std::optional<std::string>& hint) {
    const StepResult r = step(scene, world, st, a, 1000, kDefaultFovDepth, hint);
    st = r.state;
    return r;
  };
  REQUIRE(pick_object(nav, st.pose, "cup_0", {0, 4}, exec).status ==
          SkillResult::Status::Success);
  const SkillResult place = place_object(nav, st.pose, "recB", {3, 0}, exec);
  CHECK(place.status == SkillResult::Status::PlaceFailed);
  CHECK(*st.held == "cup_0");
}
