import sys

from database import database_url, make_session
from ledger import list_runs, load_records

def inspect_db(run_id=None):
    print("DATABASE:", database_url())
    session = make_session()
    try:
        runs = list_runs(session)
        print(f"--- RUNS ({len(runs)}) ---")
        for r in runs:
            print(f"{r.id:4d}  {r.created}  {r.system:9s} {r.method:20s} {r.status:14s} "
                  f"steps={r.steps} spectral={r.max_spectral_drift} energy={r.max_abs_energy_drift}")
            if r.status != "ok":
                print("ALERT: run did not finish cleanly")

        if run_id is not None:
            print(f"\n--- RECORDS OF RUN {run_id} ---")
            for rec in load_records(session, run_id):
                print(rec.step, rec.t, rec.energy_drift, rec.spectral_drift, rec.casimir_values)
                if rec.flagged:
                    print("ALERT: eigensolver failed at this step")
    finally:
        session.close()

if __name__ == "__main__":
    inspect_db(int(sys.argv[1]) if len(sys.argv) > 1 else None)
