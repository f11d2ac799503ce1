from .cli import backhaul_rate_split

if __name__ == "__main__":
    backhaul_rate_split(max_content_width=120)
