use serde::Serialize;

/// One repair strategy and how often it appears in kernel race fixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyInfo {
    pub code: &'static str,
    pub name: &'static str,
    pub description: &'static str,
    pub example: &'static str,
    pub from_industry: bool,
    /// Fixes of task-level races, count and share in tenths of a percent.
    pub task_fixes: (u32, u32),
    /// Fixes of interrupt-level races.
    pub int_fixes: (u32, u32),
    pub condition: &'static str,
    /// Planned and applied by this crate.
    pub automated: bool,
}

const fn s(
    code: &'static str,
    name: &'static str,
    description: &'static str,
    example: &'static str,
    from_industry: bool,
    task_fixes: (u32, u32),
    int_fixes: (u32, u32),
    condition: &'static str,
    automated: bool,
) -> StrategyInfo {
    StrategyInfo {
        code,
        name,
        description,
        example,
        from_industry,
        task_fixes,
        int_fixes,
        condition,
        automated,
    }
}

/// Known strategies, most frequent first.
pub fn catalog() -> Vec<StrategyInfo> {
    vec![
        s(
            "COO",
            "Change operation orders",
            "Reorder operations so the racing accesses happen at separate times",
            "Move code to where interrupts have finished",
            true,
            (88, 268),
            (17, 288),
            "A separate timing is available",
            false,
        ),
        s(
            "AAC",
            "Add additional checks",
            "Check program state before the racing access",
            "if (!dev_initialized()) wait_until_init();",
            false,
            (85, 259),
            (5, 85),
            "A race-free program state exists",
            false,
        ),
        s(
            "AL",
            "Add locks",
            "Protect both accesses with a new lock",
            "spin_lock/spin_unlock",
            true,
            (81, 247),
            (0, 0),
            "No deadlock is introduced",
            true,
        ),
        s(
            "IDE",
            "Interrupt disable and enable",
            "Mask the interrupt line around the task access",
            "disable_irq/enable_irq",
            true,
            (0, 0),
            (26, 441),
            "No deadlock is introduced",
            true,
        ),
        s(
            "AAI",
            "Add atomic instructions",
            "Replace the access by an atomic instruction",
            "atomic_set",
            false,
            (19, 58),
            (4, 68),
            "A matching atomic instruction exists",
            false,
        ),
        s(
            "Sync",
            "Synchronization",
            "Order the accesses with a synchronization primitive",
            "Read-copy update, memory barrier",
            true,
            (23, 70),
            (0, 0),
            "Used sparingly to keep performance",
            false,
        ),
        s(
            "RRC",
            "Remove race codes",
            "Delete one of the racing accesses",
            "Remove unnecessary but buggy code",
            false,
            (12, 37),
            (2, 34),
            "The racing code is no longer needed",
            false,
        ),
        s(
            "ECS",
            "Extend critical sections",
            "Widen an existing lock to cover both accesses",
            "Move spin_unlock after the racing code",
            false,
            (10, 30),
            (4, 68),
            "No deadlock is introduced",
            true,
        ),
        s(
            "MinUse",
            "Minimize the use of shared resources",
            "Stop sharing the resource",
            "Use a bit operation instead of an assignment",
            false,
            (3, 9),
            (0, 0),
            "Some accesses are redundant",
            false,
        ),
        s(
            "ATM",
            "Add try-again marks",
            "Retry the interrupted work",
            "T(){if(flag==0)...} ISR(){flag=1;...}",
            true,
            (2, 6),
            (0, 0),
            "Tasks or handlers are not performance sensitive",
            false,
        ),
        s(
            "ResUser",
            "Restrict users",
            "Forbid the racing usage in documentation",
            "No requests right after starting a device",
            true,
            (0, 0),
            (0, 0),
            "General",
            false,
        ),
        s(
            "ChgPrio",
            "Change priorities",
            "Swap the priorities of the racing contexts",
            "Reverse the priorities of two interrupts",
            true,
            (0, 0),
            (0, 0),
            "No new races appear",
            false,
        ),
        s(
            "Others",
            "Ad hoc repairs",
            "Program-specific fixes",
            "",
            false,
            (5, 15),
            (1, 17),
            "",
            false,
        ),
    ]
}
